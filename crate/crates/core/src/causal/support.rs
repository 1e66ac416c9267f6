//! Which reference scores and order effects the observational data can
//! identify.

use serde::Serialize;

use super::estimate::EstimationReport;
use super::model::{g_formula_from_law, CausalModel, ObservationalLaw};
use crate::error::Result;
use crate::lattice::{enumerate_diamonds, Diamond};
use crate::path::{enumerate_paths, reference_path, rewrite_sequence, Path};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeSupport {
    pub end: String,
    pub reference_supported: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiamondSupport {
    pub diamond: String,
    pub two_sided: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSupport {
    pub path: String,
    pub reference_supported: bool,
    pub rewrite_supported: bool,
    /// Reference supported and every rewrite diamond two-sided.
    pub identified: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SupportReport {
    pub nodes: Vec<NodeSupport>,
    pub diamonds: Vec<DiamondSupport>,
    pub paths: Vec<PathSupport>,
}

fn supported(law: &ObservationalLaw, m: &CausalModel, x0: usize, path: &Path) -> bool {
    g_formula_from_law(law, m, x0, path).is_ok()
}

/// A diamond `(K; u, v)` is two-sided supported when some prefix `π` from
/// the base to `K` has both `π·(u,v)` and `π·(v,u)` supported.
fn two_sided(law: &ObservationalLaw, m: &CausalModel, x0: usize, d: &Diamond, path_cap: usize) -> Result<bool> {
    for prefix in enumerate_paths(m.slice(), m.base(), d.base, path_cap)? {
        let side = |first, second| {
            let mut adds = prefix.additions.clone();
            adds.extend([first, second]);
            supported(law, m, x0, &Path::new(m.base(), adds))
        };
        if side(d.u, d.v) && side(d.v, d.u) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Support flags in context `x0` for every slice node, every diamond and
/// every path from the base.
pub fn model_support_report(m: &CausalModel, x0: usize, path_cap: usize) -> Result<SupportReport> {
    let law = m.observational_law();
    let l = m.slice();
    let p = m.poset();
    let mut report = SupportReport::default();
    let mut ref_ok = std::collections::HashMap::new();
    for &j in l.nodes() {
        let ok = supported(&law, m, x0, &reference_path(p, m.base(), j)?);
        ref_ok.insert(j, ok);
        report.nodes.push(NodeSupport {
            end: p.render(j),
            reference_supported: ok,
        });
    }
    let mut diamond_ok = std::collections::HashMap::new();
    for d in enumerate_diamonds(l) {
        let ok = two_sided(&law, m, x0, &d, path_cap)?;
        diamond_ok.insert(d, ok);
        report.diamonds.push(DiamondSupport {
            diamond: l.render_diamond(&d),
            two_sided: ok,
        });
    }
    for &j in l.nodes() {
        let rho = reference_path(p, m.base(), j)?;
        for path in enumerate_paths(l, m.base(), j, path_cap)? {
            let rewrite = rewrite_sequence(l, &rho, &path)?;
            let rewrite_supported = rewrite.steps.iter().all(|s| diamond_ok[&s.diamond]);
            report.paths.push(PathSupport {
                path: path.render(p),
                reference_supported: ref_ok[&j],
                rewrite_supported,
                identified: ref_ok[&j] && rewrite_supported,
            });
        }
    }
    Ok(report)
}

/// The same flags for a family's `B₂` slice from episode counts: a path is
/// supported when at least one episode followed it.
pub fn log_support_report(r: &EstimationReport) -> SupportReport {
    let f = &r.family;
    let n = |c: usize| c > 0;
    let (e, u, w, uw, wu) = (
        n(r.classes.empty.count),
        n(r.classes.u.count),
        n(r.classes.w.count),
        n(r.orders.u_then_w.count),
        n(r.orders.w_then_u.count),
    );
    let both = format!("{}+{}", f.u, f.w);
    let node = |end: &str, ok: bool| NodeSupport {
        end: end.to_string(),
        reference_supported: ok,
    };
    let path = |text: String, reference: bool, rewrite: bool| PathSupport {
        path: text,
        reference_supported: reference,
        rewrite_supported: rewrite,
        identified: reference && rewrite,
    };
    SupportReport {
        nodes: vec![node("-", e), node(&f.u, u), node(&f.w, w), node(&both, uw)],
        diamonds: vec![DiamondSupport {
            diamond: format!("-; {}, {}", f.u, f.w),
            two_sided: uw && wu,
        }],
        paths: vec![
            path("-:()".into(), e, true),
            path(format!("-:({})", f.u), u, true),
            path(format!("-:({})", f.w), w, true),
            path(format!("-:({},{})", f.u, f.w), uw, true),
            path(format!("-:({},{})", f.w, f.u), uw, uw && wu),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::model::ModelSpec;
    use crate::poset::Ideal;

    #[test]
    fn full_support() {
        let m = ModelSpec::family_preset().build().unwrap();
        let r = model_support_report(&m, 0, 10).unwrap();
        assert!(r.nodes.iter().all(|n| n.reference_supported));
        assert!(r.diamonds.iter().all(|d| d.two_sided));
        assert_eq!(r.paths.len(), 5);
        assert!(r.paths.iter().all(|p| p.identified));
    }

    #[test]
    fn one_sided_diamond_flags_only_the_swapped_path() {
        let mut m = ModelSpec::family_preset().build().unwrap();
        m.set_propensity(Ideal::EMPTY, 0, vec![(0, 0.5)]).unwrap();
        let r = model_support_report(&m, 0, 10).unwrap();
        assert!(!r.diamonds[0].two_sided);
        let flags: Vec<(String, bool)> = r.paths.iter().map(|p| (p.path.clone(), p.identified)).collect();
        assert_eq!(
            flags,
            [
                ("-:()".to_string(), true),
                ("-:(u)".to_string(), true),
                ("-:(w)".to_string(), false),
                ("-:(u,w)".to_string(), true),
                ("-:(w,u)".to_string(), false),
            ]
        );
    }
}
