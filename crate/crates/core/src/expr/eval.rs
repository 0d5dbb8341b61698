//! Tree walkers: plain values and Taylor jets.

use super::jet::JetSpace;
use super::{Arg, EvalError, Func, Node, Power, VarKind};

fn group<'a>(kind: VarKind, x: &'a [f64], t: &'a [f64]) -> &'a [f64] {
    match kind {
        VarKind::X => x,
        VarKind::T => t,
    }
}

fn finite(v: f64, node: &Node) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::domain("non-finite result", node))
    }
}

/// Quintic smoothstep `6u^5 - 15u^4 + 10u^3` and its first three derivatives.
pub(crate) fn smoothstep(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        u3 * (10.0 + u * (-15.0 + 6.0 * u)),
        30.0 * u2 * (1.0 - u) * (1.0 - u),
        60.0 * u * (1.0 - u) * (1.0 - 2.0 * u),
        60.0 - 360.0 * u + 360.0 * u2,
    ]
}

fn pow_value(b: f64, p: Power, node: &Node) -> Result<f64, EvalError> {
    match p {
        Power::Int(n) => {
            if b == 0.0 && n < 0 {
                return Err(EvalError::domain("division by zero", node));
            }
            Ok(b.powi(n))
        }
        Power::Half(_) => {
            if b <= 0.0 {
                return Err(EvalError::domain("non-positive base of half-integer power", node));
            }
            Ok(b.powf(p.value()))
        }
    }
}

pub(crate) fn value(node: &Node, x: &[f64], t: &[f64]) -> Result<f64, EvalError> {
    let v = match node {
        Node::Const(c) => *c,
        Node::Var(k, i) => group(*k, x, t)[*i],
        Node::Neg(a) => -value(a, x, t)?,
        Node::Add(a, b) => value(a, x, t)? + value(b, x, t)?,
        Node::Sub(a, b) => value(a, x, t)? - value(b, x, t)?,
        Node::Mul(a, b) => value(a, x, t)? * value(b, x, t)?,
        Node::Div(a, b) => {
            let den = value(b, x, t)?;
            if den == 0.0 {
                return Err(EvalError::domain("division by zero", node));
            }
            value(a, x, t)? / den
        }
        Node::Pow(a, p) => pow_value(value(a, x, t)?, *p, node)?,
        Node::Func(f, a) => {
            let v = value(a, x, t)?;
            match f {
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(EvalError::domain("sqrt of negative value", node));
                    }
                    v.sqrt()
                }
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
            }
        }
        Node::Jb(arg) => (1.0 + sq_norm(arg, x, t)?).sqrt(),
        Node::Norm2(arg) => sq_norm(arg, x, t)?.sqrt(),
        Node::Dot(a, b) => {
            let (u, v) = (group(*a, x, t), group(*b, x, t));
            u.iter().zip(v).map(|(p, q)| p * q).sum()
        }
        Node::Excise {
            var,
            inner,
            outer,
            body,
        } => {
            let r = norm(group(*var, x, t));
            let u = (r - inner) / (outer - inner);
            if u <= 0.0 {
                0.0
            } else if u >= 1.0 {
                value(body, x, t)?
            } else {
                smoothstep(u)[0] * value(body, x, t)?
            }
        }
    };
    finite(v, node)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn sq_norm(arg: &Arg, x: &[f64], t: &[f64]) -> Result<f64, EvalError> {
    Ok(match arg {
        Arg::Vector(k) => group(*k, x, t).iter().map(|c| c * c).sum(),
        Arg::Scalar(a) => {
            let v = value(a, x, t)?;
            v * v
        }
    })
}

fn offset(kind: VarKind, x: &[f64]) -> usize {
    match kind {
        VarKind::X => 0,
        VarKind::T => x.len(),
    }
}

fn jet_sq_norm(
    arg: &Arg,
    x: &[f64],
    t: &[f64],
    sp: &JetSpace,
) -> Result<Vec<f64>, EvalError> {
    match arg {
        Arg::Vector(k) => {
            let base = offset(*k, x);
            let mut acc = sp.constant(0.0);
            for (i, &c) in group(*k, x, t).iter().enumerate() {
                let v = sp.variable(base + i, c);
                let sq = sp.mul(&v, &v);
                acc.iter_mut().zip(&sq).for_each(|(a, b)| *a += b);
            }
            Ok(acc)
        }
        Arg::Scalar(a) => {
            let v = jet(a, x, t, sp)?;
            Ok(sp.mul(&v, &v))
        }
    }
}

fn sqrt_jet(a: &[f64], sp: &JetSpace, node: &Node) -> Result<Vec<f64>, EvalError> {
    let c = a[0];
    if c < 0.0 {
        return Err(EvalError::domain("sqrt of negative value", node));
    }
    if sp.order() == 0 {
        return Ok(sp.constant(c.sqrt()));
    }
    if c == 0.0 {
        return Err(EvalError::domain("sqrt is not differentiable at 0", node));
    }
    let r = c.sqrt();
    Ok(sp.compose(
        a,
        &[
            r,
            0.5 / r,
            -0.25 / (r * c),
            0.375 / (r * c * c),
        ][..=sp.order()],
    ))
}

fn pow_jet(a: &[f64], p: Power, sp: &JetSpace, node: &Node) -> Result<Vec<f64>, EvalError> {
    let c = a[0];
    let e = p.value();
    match p {
        Power::Int(n) if c == 0.0 && n < 0 => {
            return Err(EvalError::domain("division by zero", node))
        }
        Power::Half(_) if c <= 0.0 => {
            return Err(EvalError::domain(
                "non-positive base of half-integer power",
                node,
            ))
        }
        _ => {}
    }
    let mut derivs = Vec::with_capacity(sp.order() + 1);
    let mut falling = 1.0;
    for k in 0..=sp.order() {
        if falling == 0.0 {
            derivs.push(0.0);
            continue;
        }
        let v = match p {
            Power::Int(n) => c.powi(n - k as i32),
            Power::Half(_) => c.powf(e - k as f64),
        };
        derivs.push(falling * v);
        falling *= e - k as f64;
    }
    Ok(sp.compose(a, &derivs))
}

pub(crate) fn jet(node: &Node, x: &[f64], t: &[f64], sp: &JetSpace) -> Result<Vec<f64>, EvalError> {
    let n = sp.order();
    let out = match node {
        Node::Const(c) => sp.constant(*c),
        Node::Var(k, i) => sp.variable(offset(*k, x) + i, group(*k, x, t)[*i]),
        Node::Neg(a) => jet(a, x, t, sp)?.into_iter().map(|v| -v).collect(),
        Node::Add(a, b) => {
            let (u, v) = (jet(a, x, t, sp)?, jet(b, x, t, sp)?);
            u.iter().zip(&v).map(|(p, q)| p + q).collect()
        }
        Node::Sub(a, b) => {
            let (u, v) = (jet(a, x, t, sp)?, jet(b, x, t, sp)?);
            u.iter().zip(&v).map(|(p, q)| p - q).collect()
        }
        Node::Mul(a, b) => sp.mul(&jet(a, x, t, sp)?, &jet(b, x, t, sp)?),
        Node::Div(a, b) => {
            let den = jet(b, x, t, sp)?;
            let c = den[0];
            if c == 0.0 {
                return Err(EvalError::domain("division by zero", node));
            }
            let r = 1.0 / c;
            let recip = sp.compose(&den, &[r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r][..=n]);
            sp.mul(&jet(a, x, t, sp)?, &recip)
        }
        Node::Pow(a, p) => pow_jet(&jet(a, x, t, sp)?, *p, sp, node)?,
        Node::Func(f, a) => {
            let u = jet(a, x, t, sp)?;
            let c = u[0];
            match f {
                Func::Sqrt => sqrt_jet(&u, sp, node)?,
                Func::Exp => sp.compose(&u, &[c.exp(); 4][..=n]),
                Func::Sin => {
                    let (s, co) = c.sin_cos();
                    sp.compose(&u, &[s, co, -s, -co][..=n])
                }
                Func::Cos => {
                    let (s, co) = c.sin_cos();
                    sp.compose(&u, &[co, -s, -co, s][..=n])
                }
            }
        }
        Node::Jb(arg) => {
            let mut q = jet_sq_norm(arg, x, t, sp)?;
            q[0] += 1.0;
            sqrt_jet(&q, sp, node)?
        }
        Node::Norm2(arg) => match arg {
            Arg::Scalar(a) => {
                let u = jet(a, x, t, sp)?;
                if u[0] > 0.0 {
                    u
                } else if u[0] < 0.0 {
                    u.into_iter().map(|v| -v).collect()
                } else if n == 0 {
                    sp.constant(0.0)
                } else {
                    return Err(EvalError::domain("norm2 is not differentiable at 0", node));
                }
            }
            Arg::Vector(_) => sqrt_jet(&jet_sq_norm(arg, x, t, sp)?, sp, node).map_err(|_| {
                EvalError::domain("norm2 is not differentiable at 0", node)
            })?,
        },
        Node::Dot(a, b) => {
            let (oa, ob) = (offset(*a, x), offset(*b, x));
            let (u, v) = (group(*a, x, t), group(*b, x, t));
            let mut acc = sp.constant(0.0);
            for i in 0..u.len() {
                let p = sp.mul(&sp.variable(oa + i, u[i]), &sp.variable(ob + i, v[i]));
                acc.iter_mut().zip(&p).for_each(|(s, q)| *s += q);
            }
            acc
        }
        Node::Excise {
            var,
            inner,
            outer,
            body,
        } => {
            let r = norm(group(*var, x, t));
            let u0 = (r - inner) / (outer - inner);
            if u0 <= 0.0 {
                sp.constant(0.0)
            } else if u0 >= 1.0 {
                jet(body, x, t, sp)?
            } else {
                let rj = sqrt_jet(&jet_sq_norm(&Arg::Vector(*var), x, t, sp)?, sp, node)?;
                let w = 1.0 / (outer - inner);
                let uj: Vec<f64> = rj
                    .iter()
                    .enumerate()
                    .map(|(i, v)| if i == 0 { u0 } else { v * w })
                    .collect();
                let chi = sp.compose(&uj, &smoothstep(u0)[..=n]);
                sp.mul(&chi, &jet(body, x, t, sp)?)
            }
        }
    };
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(EvalError::domain("non-finite result", node))
    }
}
