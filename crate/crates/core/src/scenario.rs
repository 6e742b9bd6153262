//! Scenario runner: stepping plus snapshots, traces, probes and the phase test.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::SystemBlocks;
use crate::config::{PhaseProbeSpec, RunConfig};
use crate::error::{Error, Result};
use crate::fespace::{FEFunction, Spaces};
use crate::material::{MaterialField, StateVector};
use crate::mesh::Mesh;
use crate::output::{write_snapshot, write_table, FieldSnapshot};
use crate::stepper::{run, CnSystem, EnergyTrace, Observer};

/// Cell and reference coordinates of a physical point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub cell: usize,
    pub reference: [f64; 2],
}

/// Finds the cell containing `x` (first match on shared edges).
pub fn locate(mesh: &Mesh<f64>, spaces: &Spaces<f64>, x: [f64; 2]) -> Option<Located> {
    let tol = 1e-10;
    (0..mesh.num_cells()).find_map(|c| {
        let p = spaces.q.map(c).inverse_map(x);
        (p[0] >= -tol && p[1] >= -tol && p[0] + p[1] <= 1.0 + tol).then_some(Located {
            cell: c,
            reference: p,
        })
    })
}

fn sample(f: &FEFunction<f64>, at: &[Located]) -> Vec<f64> {
    let mut buf = [0.0; 2];
    at.iter()
        .map(|l| {
            f.eval_ref(l.cell, l.reference, &mut buf);
            buf[0]
        })
        .collect()
}

/// Dominant wavenumbers of a line signal on two segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseAnalysis {
    /// Angular frequency carrying most energy on the reference segment.
    pub frequency: f64,
    pub k_reference: f64,
    pub k_slab: f64,
    /// RMS of the frequency component on each segment.
    pub amplitude_reference: f64,
    pub amplitude_slab: f64,
    /// Wavenumber signs differ and the slab carries signal.
    pub flipped: bool,
}

/// Temporal DFT of `samples[time][point]` at angular frequency `omega`.
fn temporal_component(times: &[f64], samples: &[Vec<f64>], omega: f64, point: usize) -> (f64, f64) {
    times
        .iter()
        .zip(samples)
        .fold((0.0, 0.0), |(re, im), (&t, row)| {
            let (s, c) = (omega * t).sin_cos();
            (re + row[point] * c, im + row[point] * s)
        })
}

fn dominant_wavenumber(xs: &[f64], field: &[(f64, f64)], dx: f64) -> f64 {
    let kmax = PI / dx;
    let nk = 801;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..nk {
        let k = -kmax + 2.0 * kmax * i as f64 / (nk - 1) as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (&x, &(a, b)) in xs.iter().zip(field) {
            // (a + ib) e^{-ikx}
            let (s, c) = (k * x).sin_cos();
            re += a * c + b * s;
            im += b * c - a * s;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (k, power);
        }
    }
    best.0
}

/// Slab amplitude below this fraction of the reference counts as no signal.
pub const MIN_RELATIVE_AMPLITUDE: f64 = 1e-3;

/// Sign test on the phase gradient along a line.
///
/// `samples[i][j]` is the signal at `times[i]` and `xs[j]`. A rightward
/// travelling wave `cos(k x - w t)` gives `k > 0`.
pub fn phase_gradient_sign(
    xs: &[f64],
    times: &[f64],
    samples: &[Vec<f64>],
    reference: [f64; 2],
    slab: [f64; 2],
) -> Result<PhaseAnalysis> {
    if times.len() < 2
        || samples.len() != times.len()
        || samples.iter().any(|r| r.len() != xs.len())
    {
        return Err(Error::DimensionMismatch(
            "phase probe needs at least two samples per point".into(),
        ));
    }
    let seg = |r: [f64; 2]| -> Vec<usize> {
        (0..xs.len())
            .filter(|&j| xs[j] >= r[0] && xs[j] <= r[1])
            .collect()
    };
    let (ref_idx, slab_idx) = (seg(reference), seg(slab));
    if ref_idx.len() < 2 || slab_idx.len() < 2 {
        return Err(Error::Config(
            "phase probe segments need at least two points each".into(),
        ));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let window = times[times.len() - 1] - times[0] + dt;
    let dx = xs
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);

    let d_omega = PI / (4.0 * window);
    let n_omega = ((PI / dt) / d_omega).floor() as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 1..n_omega {
        let omega = i as f64 * d_omega;
        let e: f64 = ref_idx
            .iter()
            .map(|&j| {
                let (a, b) = temporal_component(times, samples, omega, j);
                a * a + b * b
            })
            .sum();
        if e > best.1 {
            best = (omega, e);
        }
    }
    let omega = best.0;
    let component = |idx: &[usize]| -> (Vec<f64>, Vec<(f64, f64)>) {
        (
            idx.iter().map(|&j| xs[j]).collect(),
            idx.iter()
                .map(|&j| temporal_component(times, samples, omega, j))
                .collect(),
        )
    };
    let rms = |f: &[(f64, f64)]| {
        (f.iter().map(|(a, b)| a * a + b * b).sum::<f64>() / f.len() as f64).sqrt()
            / times.len() as f64
    };
    let (xr, fr) = component(&ref_idx);
    let (xsl, fs) = component(&slab_idx);
    let k_reference = dominant_wavenumber(&xr, &fr, dx);
    let k_slab = dominant_wavenumber(&xsl, &fs, dx);
    let (amplitude_reference, amplitude_slab) = (rms(&fr), rms(&fs));
    let carries =
        amplitude_reference > 0.0 && amplitude_slab > MIN_RELATIVE_AMPLITUDE * amplitude_reference;
    let flipped =
        carries && k_reference != 0.0 && k_slab != 0.0 && k_reference.signum() != k_slab.signum();
    Ok(PhaseAnalysis {
        frequency: omega,
        k_reference,
        k_slab,
        amplitude_reference,
        amplitude_slab,
        flipped,
    })
}

/// Line samples recorded during a run.
#[derive(Debug, Clone, Default)]
pub struct LineRecord {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub pairing: String,
    pub n: usize,
    pub dofs: usize,
    pub steps: usize,
    pub dt: f64,
    pub seconds: f64,
    pub final_max_abs_pressure: f64,
    pub energy_initial: Option<f64>,
    pub energy_final: Option<f64>,
    pub snapshots: Vec<PathBuf>,
    pub phase: Option<PhaseAnalysis>,
    #[serde(skip)]
    pub line: Option<LineRecord>,
}

struct Recorder<'a> {
    mesh: &'a Mesh<f64>,
    snapshot_steps: Vec<usize>,
    formats: Vec<crate::output::Format>,
    velocity: bool,
    out_dir: Option<&'a Path>,
    written: Vec<PathBuf>,
    probes: Vec<Located>,
    probe_rows: Vec<Vec<f64>>,
    line: Option<(Vec<Located>, f64)>,
    record: LineRecord,
}

impl Observer<f64> for Recorder<'_> {
    fn observe(
        &mut self,
        step: usize,
        t: f64,
        _previous: Option<&StateVector<f64>>,
        current: &StateVector<f64>,
    ) -> Result<()> {
        if self.snapshot_steps.binary_search(&step).is_ok() {
            if let Some(dir) = self.out_dir {
                let snap = FieldSnapshot::from_state(t, current, self.velocity);
                for &f in &self.formats {
                    self.written.push(write_snapshot(
                        self.mesh,
                        &snap,
                        f,
                        dir,
                        &format!("snapshot_{step:06}"),
                    )?);
                }
            }
        }
        if !self.probes.is_empty() {
            let mut row = vec![t];
            row.extend(sample(&current.p, &self.probes));
            self.probe_rows.push(row);
        }
        if let Some((pts, start)) = &self.line {
            if t >= *start - 1e-12 {
                self.record.times.push(t);
                self.record.samples.push(sample(&current.p, pts));
            }
        }
        Ok(())
    }
}

fn line_points(
    mesh: &Mesh<f64>,
    spaces: &Spaces<f64>,
    cfg: &RunConfig,
    spec: &PhaseProbeSpec,
) -> Result<(Vec<f64>, Vec<Located>)> {
    let [x0, _, x1, _] = cfg.domain;
    let n = ((x1 - x0) / spec.spacing).floor() as usize;
    let mut xs = Vec::with_capacity(n);
    let mut at = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0 + (i as f64 + 0.5) * spec.spacing;
        let l = locate(mesh, spaces, [x, spec.y]).ok_or_else(|| {
            Error::Config(format!("probe point ({x}, {}) outside the mesh", spec.y))
        })?;
        xs.push(x);
        at.push(l);
    }
    Ok((xs, at))
}

/// Runs the scenario; writes outputs under `out_dir` when given.
pub fn run_scenario(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<ScenarioReport> {
    let start = Instant::now();
    cfg.validate()?;
    let name = cfg.name.clone().unwrap_or_else(|| "scenario".into());
    let mesh = Arc::new(cfg.mesh()?);
    let spaces = Spaces::new(mesh.clone(), cfg.pairing)?;
    let material: MaterialField<f64> = cfg.material(&mesh)?;
    let diag = material.validate();
    if !diag.is_valid() {
        return Err(Error::Config(format!("material: {diag}")));
    }
    let forcing = cfg.forcing()?;
    let grid = cfg.time_grid()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let blocks = SystemBlocks::assemble(&spaces, &material)?;
    let system = CnSystem::new(&spaces, &blocks, grid.dt())?;
    log::info!(
        "{name}: {} dofs, {} steps of {}",
        system.ndofs(),
        grid.n_steps(),
        grid.dt()
    );

    let probes = cfg
        .output
        .probes
        .iter()
        .map(|&p| {
            locate(&mesh, &spaces, p)
                .ok_or_else(|| Error::Config(format!("probe point {p:?} outside the mesh")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (line, xs) = match &cfg.output.phase_probe {
        Some(spec) => {
            let (xs, at) = line_points(&mesh, &spaces, cfg, spec)?;
            (Some((at, cfg.t_final - spec.window)), xs)
        }
        None => (None, Vec::new()),
    };
    let mut rec = Recorder {
        mesh: &mesh,
        snapshot_steps: cfg.snapshot_steps()?,
        formats: cfg.output.formats.clone(),
        velocity: cfg.output.velocity,
        out_dir,
        written: Vec::new(),
        probes,
        probe_rows: Vec::new(),
        line,
        record: LineRecord {
            xs,
            ..Default::default()
        },
    };
    let mut trace = EnergyTrace::new(&spaces, &material)?;
    let init = StateVector::zeros(&spaces);
    let fin = if cfg.output.energy_trace {
        run(&system, init, &forcing, &grid, &mut [&mut rec, &mut trace])?
    } else {
        run(&system, init, &forcing, &grid, &mut [&mut rec])?
    };

    if let Some(dir) = out_dir {
        if cfg.output.energy_trace {
            let rows: Vec<Vec<f64>> = trace
                .times
                .iter()
                .zip(&trace.energies)
                .map(|(&t, &e)| vec![t, e])
                .collect();
            write_table(
                BufWriter::new(File::create(dir.join("energy.csv"))?),
                &["t", "energy"],
                &rows,
            )?;
        }
        if !rec.probe_rows.is_empty() {
            let names: Vec<String> = (0..rec.probes.len()).map(|i| format!("p{i}")).collect();
            let mut header = vec!["t"];
            header.extend(names.iter().map(String::as_str));
            write_table(
                BufWriter::new(File::create(dir.join("probes.csv"))?),
                &header,
                &rec.probe_rows,
            )?;
        }
    }
    let phase = match &cfg.output.phase_probe {
        Some(spec) => Some(phase_gradient_sign(
            &rec.record.xs,
            &rec.record.times,
            &rec.record.samples,
            spec.reference,
            spec.slab,
        )?),
        None => None,
    };
    let report = ScenarioReport {
        name,
        pairing: cfg.pairing.name().to_string(),
        n: cfg.n,
        dofs: system.ndofs(),
        steps: grid.n_steps(),
        dt: grid.dt(),
        seconds: start.elapsed().as_secs_f64(),
        final_max_abs_pressure: fin.p.coeffs.iter().fold(0.0, |m, v| m.max(v.abs())),
        energy_initial: trace.energies.first().copied(),
        energy_final: trace.energies.last().copied(),
        snapshots: rec.written,
        phase,
        line: cfg.output.phase_probe.as_ref().map(|_| rec.record),
    };
    if let Some(dir) = out_dir {
        serde_json::to_writer_pretty(
            BufWriter::new(File::create(dir.join("summary.json"))?),
            &report,
        )?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn travelling(k_left: f64, k_right: f64, split: f64) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let times: Vec<f64> = (0..100).map(|i| 0.3 + i as f64 * 0.002).collect();
        let omega = 2.0 * PI * 20.0;
        let samples = times
            .iter()
            .map(|&t| {
                xs.iter()
                    .map(|&x| {
                        if x < split {
                            (k_left * x - omega * t).cos()
                        } else {
                            (k_right * x - omega * t).cos()
                        }
                    })
                    .collect()
            })
            .collect();
        (xs, times, samples)
    }

    #[test]
    fn detects_reversed_phase() {
        let (xs, ts, s) = travelling(40.0, -40.0, 0.6);
        let a = phase_gradient_sign(&xs, &ts, &s, [0.1, 0.5], [0.62, 0.78]).unwrap();
        assert!(a.flipped, "{a:?}");
        assert!((a.k_reference - 40.0).abs() < 2.0, "{a:?}");
        assert!((a.k_slab + 40.0).abs() < 2.0, "{a:?}");
        assert!((a.frequency - 2.0 * PI * 20.0).abs() < 2.0 * PI, "{a:?}");
    }

    #[test]
    fn same_direction_is_not_flipped() {
        let (xs, ts, s) = travelling(40.0, 60.0, 0.6);
        let a = phase_gradient_sign(&xs, &ts, &s, [0.1, 0.5], [0.62, 0.78]).unwrap();
        assert!(!a.flipped, "{a:?}");
        assert!(a.k_slab > 0.0);
    }

    #[test]
    fn silent_slab_is_not_flipped() {
        let (xs, ts, mut s) = travelling(40.0, -40.0, 0.6);
        for row in &mut s {
            row.iter_mut()
                .zip(&xs)
                .filter(|(_, &x)| x >= 0.6)
                .for_each(|(v, _)| *v = 0.0);
        }
        let a = phase_gradient_sign(&xs, &ts, &s, [0.1, 0.5], [0.62, 0.78]).unwrap();
        assert!(!a.flipped);
        assert_eq!(a.amplitude_slab, 0.0);
    }

    #[test]
    fn noise_level_slab_is_not_flipped() {
        let (xs, ts, mut s) = travelling(40.0, -40.0, 0.6);
        for row in &mut s {
            row.iter_mut()
                .zip(&xs)
                .filter(|(_, &x)| x >= 0.6)
                .for_each(|(v, _)| *v *= 1e-5);
        }
        let a = phase_gradient_sign(&xs, &ts, &s, [0.1, 0.5], [0.62, 0.78]).unwrap();
        assert!(a.k_slab < 0.0 && !a.flipped, "{a:?}");
    }

    #[test]
    fn locate_finds_containing_cell() {
        let cfg = parse_config(
            r#"{"domain": [0, 0, 2, 2], "n": 5, "pairing": "rtn0", "t_final": 0.1, "dt": 0.05}"#,
        )
        .unwrap();
        let mesh = Arc::new(cfg.mesh().unwrap());
        let spaces = Spaces::new(mesh.clone(), cfg.pairing).unwrap();
        for x in [[0.1, 0.1], [1.9, 0.33], [0.8, 0.8], [2.0, 2.0]] {
            let l = locate(&mesh, &spaces, x).unwrap();
            let back = spaces.q.map(l.cell).map(l.reference);
            assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
        }
        assert!(locate(&mesh, &spaces, [2.5, 1.0]).is_none());
    }

    #[test]
    fn small_scenario_writes_outputs() {
        let dir = std::env::temp_dir().join(format!("metawave-scenario-{}", std::process::id()));
        let cfg = parse_config(
            r#"{"name": "tiny", "domain": [0, 0, 1, 1], "n": 4, "pairing": "rtn0", "t_final": 0.1, "dt": 0.025,
                "boundary": [{"name": "src", "sides": ["left"], "source": {"name": "constant", "value": 1}}, {"name": "rest"}],
                "output": {"snapshot_times": [0.05, 0.1], "formats": ["vtk", "csv"], "energy_trace": true, "probes": [[0.5, 0.5]]}}"#,
        )
        .unwrap();
        let r = run_scenario(&cfg, Some(&dir)).unwrap();
        assert_eq!(r.steps, 4);
        assert_eq!(r.snapshots.len(), 4);
        assert!(r.final_max_abs_pressure > 0.0);
        for f in [
            "energy.csv",
            "probes.csv",
            "summary.json",
            "snapshot_000002.vtk",
            "snapshot_000004.csv",
        ] {
            assert!(dir.join(f).exists(), "{f}");
        }
        let probes = std::fs::read_to_string(dir.join("probes.csv")).unwrap();
        assert_eq!(probes.lines().count(), 1 + 5);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
