/// Canonical COCOMO rating scale, lowest first.
pub(crate) const RATING_SCALE: [&str; 6] = ["vl", "l", "n", "h", "vh", "xh"];

/// Maps a rating label spelled any common way ("Very_High", "VH", "nominal", ...)
/// onto `vl`, `l`, `n`, `h`, `vh` or `xh`. Case-insensitive.
pub fn canonical_rating(label: &str) -> Option<&'static str> {
    let key: String = label
        .trim()
        .trim_matches(|c| c == '\'' || c == '"')
        .chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect();
    let canon = match key.as_str() {
        "vl" | "verylow" => "vl",
        "l" | "low" => "l",
        "n" | "nominal" | "nom" => "n",
        "h" | "high" => "h",
        "vh" | "veryhigh" => "vh",
        "xh" | "eh" | "extrahigh" | "extrahi" | "xhigh" => "xh",
        _ => return None,
    };
    Some(canon)
}

pub(crate) fn rating_rank(canon: &str) -> usize {
    RATING_SCALE.iter().position(|r| *r == canon).unwrap_or(usize::MAX)
}

/// If every label is a rating, returns the canonical labels sorted by rank
/// (duplicates after canonicalization removed).
pub(crate) fn as_rating_scale(labels: &[String]) -> Option<Vec<String>> {
    let mut canon: Vec<&'static str> = labels.iter().map(|l| canonical_rating(l)).collect::<Option<_>>()?;
    canon.sort_by_key(|c| rating_rank(c));
    canon.dedup();
    Some(canon.into_iter().map(String::from).collect())
}
