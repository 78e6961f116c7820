//! The basic color vocabulary shared by scenes, the describer and the parser.

/// Twelve basic color terms with their render colors.
pub const BASIC_COLORS: [(&str, [u8; 3]); 12] = [
    ("red", [220, 40, 40]),
    ("orange", [245, 140, 30]),
    ("yellow", [240, 220, 40]),
    ("green", [50, 170, 70]),
    ("blue", [40, 90, 220]),
    ("purple", [130, 60, 180]),
    ("pink", [240, 130, 190]),
    ("brown", [120, 75, 40]),
    ("black", [25, 25, 25]),
    ("white", [245, 245, 245]),
    ("gray", [128, 128, 128]),
    ("gold", [212, 175, 55]),
];

/// Canonical spelling of a color term, or `None` if it is not one.
pub fn canonical_color(word: &str) -> Option<&'static str> {
    let word = if word == "grey" { "gray" } else { word };
    BASIC_COLORS.iter().find(|(name, _)| *name == word).map(|(name, _)| *name)
}

pub fn color_rgb(name: &str) -> Option<[u8; 3]> {
    let name = canonical_color(name)?;
    BASIC_COLORS.iter().find(|(n, _)| *n == name).map(|(_, rgb)| *rgb)
}
