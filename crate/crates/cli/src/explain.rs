//! Statements verified by each task kind.

pub const TASKS: [&str; 8] = [
    "check-symbol",
    "check-phase",
    "stationary",
    "lagrangian-verify",
    "parametrize",
    "equivalence",
    "oscint",
    "wavefront",
];

pub fn explain(task: &str) -> Option<&'static str> {
    Some(match task {
        "check-symbol" => {
            "SG symbol estimates.\n\
             a belongs to SG^{m_e,m_psi} when every derivative obeys\n\
             |D_theta^alpha D_x^beta a(x,theta)| <= C <x>^{m_e-|beta|} <theta>^{m_psi-|alpha|}.\n\
             The check samples a dyadic mesh, records the constant for each (alpha, beta)\n\
             and fits the log-slope of the weighted derivative along x-, theta- and diagonal\n\
             rays; a positive trend is reported as a suspected violation."
        }
        "check-phase" => {
            "Admissible phase functions.\n\
             A real SG-classical symbol phi of order (1,1) is admissible when\n\
             Phi = <x>^2 |grad_x phi|^2 + <theta>^2 |grad_theta phi|^2 is SG-elliptic of\n\
             order (2,2), i.e. Phi >= c <x>^2 <theta>^2 outside a compact set.\n\
             Equivalently the transported gradient pair (gamma grad_x phi, y grad_theta phi)\n\
             never vanishes on the boundary faces. The declared principal triple\n\
             (phi^e, phi^psi, phi^psie) must satisfy the corner compatibility\n\
             sigma_psi(phi^e) = sigma_e(phi^psi) = phi^psie."
        }
        "stationary" => {
            "Boundary critical sets.\n\
             On each face the critical set is C^face = { grad_theta phi^face = 0 }, solved by\n\
             damped Gauss-Newton from a seed grid and deduplicated in compactified\n\
             coordinates. A point is non-degenerate when the Jacobian of the face system has\n\
             full rank s; then C^face is a smooth manifold of codimension s."
        }
        "lagrangian-verify" => {
            "SG-Lagrangians.\n\
             For a clean admissible phase the image lambda(C) with\n\
             lambda(x,theta) = (x, grad_x phi) is an SG-Lagrangian: the one-form\n\
             alpha^psi = xi.dx vanishes on Lambda^psi, alpha^e = -x.dxi vanishes on\n\
             Lambda^e, and <x, xi> = 0 on the corner Lambda^psie, which is the\n\
             intersection of the closures of the face components (neatness).\n\
             Euler's identity for the homogeneous components is checked alongside."
        }
        "parametrize" => {
            "Local parametrization.\n\
             Graph data (X^e, Xi^e, X^psi, Xi^psi) over a split x = (x', x''),\n\
             xi = (xi', xi'') determines the phase components\n\
             phi^e = x'.theta + x''.Xi^e, phi^psi = x'.theta - X^psi.theta and\n\
             phi^psie = x'.theta + x''.Xi^psie, glued by excision. Corner compatibility\n\
             is a conormality condition on the data. With a source phase, its Lagrangian\n\
             is recovered and compared face by face in Hausdorff distance."
        }
        "equivalence" => {
            "Equivalence of phase functions.\n\
             Two non-degenerate phases parametrizing the same SG-Lagrangian agree at the\n\
             principal level up to a fibre-preserving change of variables when the\n\
             Lagrangians coincide, the transported phase values agree at matched points and\n\
             the fibre Hessians have equal signature there. The matrix equation\n\
             W + W^T C W = B is solved by fixed-point iteration for small B."
        }
        "oscint" => {
            "Oscillatory integrals.\n\
             For an admissible phase and an SG amplitude, I_phi(a) = int e^{i phi} a dtheta is a\n\
             tempered distribution, linear and continuous in a, and an absolutely convergent\n\
             integral for Schwartz amplitudes. The pairing <I_phi(a), u> is computed as the\n\
             limit of Gaussian-regularized integrals with quadratic extrapolation in epsilon."
        }
        "wavefront" => {
            "Wave-front inclusion.\n\
             The SG wave-front set of I_phi(a) is contained in the Lagrangian of phi, and its\n\
             projection lies in the projection of the critical set. The probe localizes at\n\
             x0 with a Gaussian bump, modulates by e^{-i lambda xi.x} and flags directions\n\
             whose response does not decay like lambda^{-3}; every flag must lie near the\n\
             computed Lagrangian (the converse is not asserted)."
        }
        _ => return None,
    })
}
