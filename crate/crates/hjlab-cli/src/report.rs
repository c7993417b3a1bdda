//! Cross-run comparison tables from saved manifests.

use std::collections::BTreeMap;

use anyhow::Result;

use crate::manifest::RunManifest;

/// Render a Markdown table of key quantities across manifests, grouped by
/// the gradient exponent `q`; runs with incompatible structure parameters
/// are never merged into one group.
pub fn render(manifests: &[(String, RunManifest)]) -> Result<String> {
    let mut groups: BTreeMap<String, Vec<&(String, RunManifest)>> = BTreeMap::new();
    for entry in manifests {
        let p = &entry.1.params;
        let key = format!("q={} delta={} M={} T={}", p.q, p.delta, p.sup_bound, p.horizon);
        groups.entry(key).or_default().push(entry);
    }
    let columns = [
        "holder.space_exponent",
        "holder.time_exponent",
        "holder.constant",
        "revholder.theta",
        "rollout.worst_margin",
        "bridge.sandwich_constant",
    ];
    let mut out = String::new();
    if groups.len() > 1 {
        out.push_str("> runs with different structure parameters are grouped, not merged\n\n");
    }
    for (key, rows) in &groups {
        out.push_str(&format!("## {key}\n\n"));
        out.push_str("| run | status |");
        for c in &columns {
            out.push_str(&format!(" {c} |"));
        }
        out.push('\n');
        out.push_str("|---|---|");
        for _ in &columns {
            out.push_str("---|");
        }
        out.push('\n');
        for (path, m) in rows {
            out.push_str(&format!("| {path} | {} |", m.status));
            for c in &columns {
                match m.results.iter().find(|r| &r.name == c) {
                    Some(r) => out.push_str(&format!(" {:.6} |", r.value)),
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        // exponent spread within the group, the uniformity view
        let spread = |name: &str| -> Option<f64> {
            let vals: Vec<f64> = rows
                .iter()
                .filter_map(|(_, m)| m.results.iter().find(|r| r.name == name).map(|r| r.value))
                .collect();
            if vals.len() < 2 {
                return None;
            }
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Some(hi - lo)
        };
        if let (Some(s), Some(t)) = (
            spread("holder.space_exponent"),
            spread("holder.time_exponent"),
        ) {
            out.push_str(&format!(
                "\nexponent spread: space {s:.4}, time {t:.4}\n"
            ));
        }
        out.push('\n');
    }
    Ok(out)
}
