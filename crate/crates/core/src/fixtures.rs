//! Bundled network fixtures.

pub const G6: &str = include_str!("../fixtures/g6.json");
pub const G8: &str = include_str!("../fixtures/g8.json");
pub const G8_SIGNED: &str = include_str!("../fixtures/g8-signed.json");
pub const G12: &str = include_str!("../fixtures/g12.json");
pub const T12: &str = include_str!("../fixtures/t12.json");

pub const NAMES: [&str; 5] = ["g6", "g8", "g8-signed", "g12", "t12"];

/// Looks up a bundled fixture by name (`g8`, `g8-signed`, ...).
pub fn bundled(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".json") {
        "g6" => Some(G6),
        "g8" => Some(G8),
        "g8-signed" => Some(G8_SIGNED),
        "g12" => Some(G12),
        "t12" => Some(T12),
        _ => None,
    }
}
