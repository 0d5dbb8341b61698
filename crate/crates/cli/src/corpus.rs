//! Bundled scenarios.

pub struct Entry {
    pub name: &'static str,
    pub json: &'static str,
}

macro_rules! entry {
    ($name:literal) => {
        Entry {
            name: $name,
            json: include_str!(concat!("../corpus/", $name, ".json")),
        }
    };
}

pub const CORPUS: [Entry; 7] = [
    entry!("fourier"),
    entry!("kg"),
    entry!("degenerate"),
    entry!("roundtrip"),
    entry!("conormality-violation"),
    entry!("equivalence-pair"),
    entry!("signature-mismatch"),
];

pub fn find(name: &str) -> Option<&'static Entry> {
    CORPUS.iter().find(|e| e.name == name)
}
