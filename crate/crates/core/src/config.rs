//! Run configuration (JSON).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::Pairing;
use crate::material::{MaterialField, RegionCoefficients};
use crate::mesh::{BoundaryKind, BoundaryLabel, BoundaryPart, Mesh, Rect, RegionIndicator, Side};
use crate::mms::DtPolicy;
use crate::output::Format;
use crate::sources::Source;
use crate::stepper::{Forcing, TimeGrid};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// `[x0, y0, x1, y1]`
    pub domain: [f64; 4],
    /// Squares per side.
    pub n: usize,
    pub pairing: Pairing,
    pub t_final: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub dt_policy: Option<DtPolicy>,
    #[serde(default)]
    pub material: MaterialSpec,
    /// Boundary pieces, matched in order. Empty means zero pressure everywhere.
    #[serde(default)]
    pub boundary: Vec<BoundarySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default = "one")]
    pub rho_a: f64,
    #[serde(default = "one")]
    pub kappa_a: f64,
    #[serde(default = "one")]
    pub omega_rho: f64,
    #[serde(default = "one")]
    pub omega_kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Metamaterial rectangles; the rest of the domain is an ordinary medium.
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
}

impl Default for MaterialSpec {
    fn default() -> Self {
        Self {
            rho_a: 1.0,
            kappa_a: 1.0,
            omega_rho: 1.0,
            omega_kappa: 1.0,
            gamma: 0.0,
            regions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub rect: [f64; 4],
    pub cap_omega_rho: f64,
    pub cap_omega_kappa: f64,
    #[serde(default)]
    pub rho_a: Option<f64>,
    #[serde(default)]
    pub kappa_a: Option<f64>,
}

/// Source name plus numeric parameters, validated by [`Source::from_name`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            name: "zero".into(),
            params: BTreeMap::new(),
        }
    }
}

impl SourceSpec {
    pub fn source(&self) -> Result<Source> {
        Source::from_name(&self.name, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub name: String,
    #[serde(default = "dirichlet")]
    pub kind: BoundaryKind,
    /// Sides of the domain; `None` takes every edge not claimed earlier.
    #[serde(default)]
    pub sides: Option<Vec<Side>>,
    #[serde(default)]
    pub source: SourceSpec,
}

fn dirichlet() -> BoundaryKind {
    BoundaryKind::Dirichlet
}

fn default_formats() -> Vec<Format> {
    vec![Format::Vtk]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub velocity: bool,
    #[serde(default)]
    pub energy_trace: bool,
    /// Points whose pressure is recorded every step.
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    #[serde(default)]
    pub phase_probe: Option<PhaseProbeSpec>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            snapshot_times: Vec::new(),
            formats: default_formats(),
            velocity: false,
            energy_trace: false,
            probes: Vec::new(),
            phase_probe: None,
        }
    }
}

/// Horizontal line probe compared between two `x` ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseProbeSpec {
    pub y: f64,
    pub reference: [f64; 2],
    pub slab: [f64; 2],
    /// Length of the final time window that is analysed.
    pub window: f64,
    /// Sample spacing along the line.
    pub spacing: f64,
}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn rect(r: [f64; 4]) -> Rect<f64> {
    Rect::new(r[0], r[1], r[2], r[3])
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn domain_rect(&self) -> Rect<f64> {
        rect(self.domain)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = self.domain_rect();
        if !(d.x1 > d.x0 && d.y1 > d.y0) {
            return bad(format!("domain {:?} is empty", self.domain));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.t_final > 0.0) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        match (self.dt, self.dt_policy) {
            (Some(_), Some(_)) => return bad("give either dt or dt_policy, not both".into()),
            (None, None) => return bad("one of dt or dt_policy is required".into()),
            (Some(dt), None) if !(dt > 0.0) => return bad(format!("dt = {dt} must be positive")),
            _ => {}
        }
        self.time_grid()?;
        for r in &self.material.regions {
            let rr = rect(r.rect);
            if !(rr.x1 > rr.x0 && rr.y1 > rr.y0) {
                return bad(format!("region '{}' is empty", r.name));
            }
            if rr.x0 < d.x0 || rr.y0 < d.y0 || rr.x1 > d.x1 || rr.y1 > d.y1 {
                return bad(format!("region '{}' leaves the domain", r.name));
            }
        }
        let mut seen = HashMap::new();
        for b in &self.boundary {
            b.source.source()?;
            if let Some(kind) = seen.insert(b.name.clone(), b.kind) {
                if kind != b.kind {
                    return bad(format!("boundary '{}' declared with two kinds", b.name));
                }
            }
        }
        for &t in &self.output.snapshot_times {
            if !(0.0..=self.t_final).contains(&t) {
                return bad(format!("snapshot time {t} outside [0, {}]", self.t_final));
            }
        }
        if self.output.formats.is_empty() && !self.output.snapshot_times.is_empty() {
            return bad("snapshots requested without an output format".into());
        }
        if let Some(p) = &self.output.phase_probe {
            if !(p.window > 0.0 && p.spacing > 0.0) {
                return bad("phase probe window and spacing must be positive".into());
            }
            for r in [p.reference, p.slab] {
                if !(r[1] > r[0]) {
                    return bad(format!("phase probe range {r:?} is empty"));
                }
            }
        }
        Ok(())
    }

    /// Time step after applying the policy with `h = width / n`.
    pub fn time_step(&self) -> f64 {
        match (self.dt, self.dt_policy) {
            (Some(dt), _) => dt,
            (None, Some(p)) => {
                let h = (self.domain[2] - self.domain[0]) / self.n as f64;
                match p {
                    DtPolicy::H => h,
                    DtPolicy::H2 => h * h,
                }
            }
            (None, None) => f64::NAN,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid<f64>> {
        TimeGrid::with_step(self.t_final, self.time_step())
    }

    /// Snapshot steps, rounding requested times to the nearest grid point.
    pub fn snapshot_steps(&self) -> Result<Vec<usize>> {
        let grid = self.time_grid()?;
        let mut steps: Vec<usize> = self
            .output
            .snapshot_times
            .iter()
            .map(|&t| {
                let n = (t / grid.dt()).round() as usize;
                if (n as f64 * grid.dt() - t).abs() > 1e-9 * self.t_final {
                    log::warn!("snapshot time {t} moved to grid time {}", grid.time(n));
                }
                n.min(grid.n_steps())
            })
            .collect();
        steps.sort_unstable();
        steps.dedup();
        Ok(steps)
    }

    /// Structured mesh with classified boundary.
    pub fn mesh(&self) -> Result<Mesh<f64>> {
        let d = self.domain_rect();
        let mesh = Mesh::build_structured(d, self.n)?;
        if self.boundary.is_empty() {
            return mesh.classify_boundary(vec![BoundaryPart::all(BoundaryLabel::dirichlet(
                "boundary",
            ))]);
        }
        let tol = 1e-9 * (d.width() + d.height());
        let mut claimed: Vec<Side> = Vec::new();
        let mut parts = Vec::new();
        for b in &self.boundary {
            let label = BoundaryLabel {
                name: b.name.clone(),
                kind: b.kind,
            };
            let earlier = claimed.clone();
            let own = b.sides.clone();
            let rest = own.is_none();
            parts.push(BoundaryPart::new(label, move |p| {
                if earlier.iter().any(|s| s.matches(&d, p, tol)) {
                    return false;
                }
                match &own {
                    Some(sides) => sides.iter().any(|s| s.matches(&d, p, tol)),
                    None => true,
                }
            }));
            if let Some(s) = &b.sides {
                claimed.extend(s);
            }
            if rest {
                break;
            }
        }
        mesh.classify_boundary(parts)
    }

    pub fn material(&self, mesh: &Mesh<f64>) -> Result<MaterialField<f64>> {
        let m = &self.material;
        let named: Vec<(String, Rect<f64>)> = m
            .regions
            .iter()
            .map(|r| (r.name.clone(), rect(r.rect)))
            .collect();
        let region = RegionIndicator::from_rects(mesh, "background", &named)?;
        let mut coeffs = vec![RegionCoefficients::pim(m.rho_a, m.kappa_a)];
        for r in &m.regions {
            coeffs.push(RegionCoefficients::nim(
                r.rho_a.unwrap_or(m.rho_a),
                r.kappa_a.unwrap_or(m.kappa_a),
                r.cap_omega_rho,
                r.cap_omega_kappa,
            ));
        }
        MaterialField::from_regions(&region, &coeffs, m.omega_rho, m.omega_kappa, m.gamma)
    }

    pub fn forcing(&self) -> Result<ConfigForcing> {
        let mut sources = HashMap::new();
        for b in &self.boundary {
            sources.entry(b.name.clone()).or_insert(b.source.source()?);
        }
        Ok(ConfigForcing { sources })
    }
}

/// Boundary data looked up by label name.
#[derive(Debug, Clone)]
pub struct ConfigForcing {
    sources: HashMap<String, Source>,
}

impl ConfigForcing {
    fn eval(&self, label: &BoundaryLabel, t: f64, x: [f64; 2]) -> f64 {
        self.sources.get(&label.name).map_or(0.0, |s| s.eval(t, x))
    }

    pub fn source(&self, label: &str) -> Option<&Source> {
        self.sources.get(label)
    }
}

impl Forcing<f64> for ConfigForcing {
    fn has_body_loads(&self) -> bool {
        false
    }

    fn p_d(&self, label: &BoundaryLabel, t: f64, x: [f64; 2]) -> f64 {
        self.eval(label, t, x)
    }

    fn v_n(&self, label: &BoundaryLabel, t: f64, x: [f64; 2]) -> f64 {
        self.eval(label, t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"domain": [0, 0, 1, 1], "n": 4, "pairing": "rtn0", "t_final": 0.5, "dt": 0.1}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.material, MaterialSpec::default());
        assert!(c.boundary.is_empty());
        assert_eq!(c.output.formats, vec![Format::Vtk]);
        assert_eq!(c.time_grid().unwrap().n_steps(), 5);
        let mesh = c.mesh().unwrap();
        assert!(mesh
            .tagged_boundary()
            .all(|(_, l)| l.unwrap().kind == BoundaryKind::Dirichlet));
        assert!(c.material(&mesh).unwrap().validate().is_valid());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"n\"", "\"N\"");
        assert!(parse_config(&text).is_err());
        let text = MINIMAL.replace("}", r#", "material": {"rho": 2}}"#);
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("rho"), "{err}");
    }

    #[test]
    fn negative_dt_rejected() {
        assert!(parse_config(&MINIMAL.replace("0.1}", "-0.1}")).is_err());
        assert!(parse_config(&MINIMAL.replace("0.1}", "0.3}")).is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_config("{\n  \"domain\": [0, 0, 1, 1],\n  \"n\": \"four\"\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn boundary_parts_in_order() {
        let text = r#"{"domain": [0, 0, 2, 2], "n": 4, "pairing": "rtn1", "t_final": 0.5, "dt_policy": "h2",
            "boundary": [
                {"name": "source", "sides": ["left"], "source": {"name": "left_gaussian"}},
                {"name": "wall", "kind": "neumann", "sides": ["top"]},
                {"name": "rest"}
            ]}"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.time_step(), 0.25);
        let mesh = c.mesh().unwrap();
        let mut counts = HashMap::new();
        for (_, l) in mesh.tagged_boundary() {
            *counts.entry(l.unwrap().name.clone()).or_insert(0) += 1;
        }
        assert_eq!(counts["source"], 4);
        assert_eq!(counts["wall"], 4);
        assert_eq!(counts["rest"], 8);
        let f = c.forcing().unwrap();
        assert_eq!(f.source("source"), Some(&Source::LeftGaussian));
    }

    #[test]
    fn bad_sources_rejected() {
        let with = |s: &str| {
            MINIMAL.replace(
                "}",
                &format!(r#", "boundary": [{{"name": "b", "source": {s}}}]}}"#),
            )
        };
        assert!(parse_config(&with(r#"{"name": "corner_plane", "mu_f": 18}"#)).is_ok());
        assert!(parse_config(&with(r#"{"name": "corner_plane", "mu": 18}"#)).is_err());
        assert!(parse_config(&with(r#"{"name": "warble"}"#)).is_err());
    }

    #[test]
    fn snapshot_times_round_to_grid() {
        let text = MINIMAL.replace("}", r#", "output": {"snapshot_times": [0.0, 0.21, 0.5]}}"#);
        let c = parse_config(&text).unwrap();
        assert_eq!(c.snapshot_steps().unwrap(), vec![0, 2, 5]);
        let text = MINIMAL.replace("}", r#", "output": {"snapshot_times": [0.7]}}"#);
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn region_must_fit_domain() {
        let text = MINIMAL.replace(
            "}",
            r#", "material": {"regions": [{"name": "slab", "rect": [0.5, 0, 1.5, 1], "cap_omega_rho": 1, "cap_omega_kappa": 1}]}}"#,
        );
        assert!(parse_config(&text).is_err());
    }
}
