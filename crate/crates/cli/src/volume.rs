use std::time::Instant;

use serde_json::{json, Map, Value};
use simplexslice::exact::{
    lawrence_volume, varsi_fraction, ExactVolume, LawrenceProblem, FLOAT_MAX_DIM,
};
use simplexslice::geometry::io::BodySpec;
use simplexslice::geometry::{ln_factorial, Body};
use simplexslice::sampling::{rejection_volume, rejection_volume_for_error, SamplerConfig};
use simplexslice::walk::{volume_hnr, volume_nonconvex, WalkConfig};
use simplexslice::{Error, Method, VolumeEstimate};

use crate::args::{BackendArg, VolumeArgs, VolumeMethod, WalkArgs};
use crate::error::{input_error, CliError, CliResult};

/// Largest dimension the Lawrence method is chosen for automatically.
const AUTO_LAWRENCE_MAX_DIM: usize = 100;
/// Points in the pilot run that decides between rejection and the walk.
const PILOT_POINTS: usize = 100_000;
/// Below this pilot fraction the walk is preferred to rejection.
const SMALL_FRACTION: f64 = 0.01;
const PILOT_STREAM: u64 = 0x9170;
const DEFAULT_REJECTION_POINTS: usize = 1_000_000;

pub fn load_body(path: &std::path::Path) -> CliResult<(BodySpec, Body, f64)> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(path, e))?;
    let spec = BodySpec::from_json_str(&text).map_err(|e| input_error(path, e))?;
    let (body, scale) = spec.to_body().map_err(|e| input_error(path, e))?;
    Ok((spec, body, scale))
}

pub fn walk_config(w: &WalkArgs, seed: u64) -> CliResult<WalkConfig> {
    let mut cfg = WalkConfig::new(seed).with_epsilon(w.epsilon);
    if let Some(k) = w.walk_length {
        cfg = cfg.with_walk_length(k);
    }
    if let Some(n) = w.points_per_phase {
        cfg = cfg.with_points_per_phase(n);
    }
    if w.chains == 0 {
        return Err(CliError::usage("--chains must be at least 1"));
    }
    cfg.chains = w.chains;
    Ok(cfg)
}

fn family_count(body: &Body) -> Option<usize> {
    LawrenceProblem::<f64>::from_body(body)
        .ok()
        .map(|p| p.families().len())
}

/// Chosen method and a note on why.
fn auto_method(body: &Body, cfg: &SamplerConfig) -> CliResult<(VolumeMethod, Value)> {
    let d = body.dim();
    if body.ellipsoids().is_empty() {
        if body.halfspaces().len() == 1 {
            return Ok((VolumeMethod::Varsi, json!({"rule": "one halfspace"})));
        }
        if let Some(f) = family_count(body).filter(|_| d <= AUTO_LAWRENCE_MAX_DIM) {
            return Ok((
                VolumeMethod::Lawrence,
                json!({"rule": "at most two parallel families", "families": f}),
            ));
        }
    }
    let pilot = rejection_volume(
        body,
        PILOT_POINTS,
        &cfg.clone().with_stream(PILOT_STREAM),
        None,
    )?;
    let small = pilot.volume_fraction < SMALL_FRACTION;
    let method = match (small, body.is_convex()) {
        (false, _) => VolumeMethod::Rejection,
        (true, true) => VolumeMethod::Hnr,
        (true, false) => VolumeMethod::Nonconvex,
    };
    Ok((
        method,
        json!({
            "rule": if small { "pilot fraction below 1%" } else { "pilot fraction at least 1%" },
            "pilot_points": PILOT_POINTS,
            "pilot_fraction": pilot.volume_fraction,
        }),
    ))
}

fn mismatch(method: &str, why: String) -> CliError {
    CliError::usage(format!("--method {method} does not fit this body: {why}"))
}

fn check_compatible(method: VolumeMethod, body: &Body) -> CliResult<()> {
    let (h, e) = (body.halfspaces().len(), body.ellipsoids().len());
    match method {
        VolumeMethod::Varsi if h != 1 || e != 0 => Err(mismatch(
            "varsi",
            format!("it needs exactly one halfspace and no ellipsoids, the body has {h} halfspaces and {e} ellipsoids"),
        )),
        VolumeMethod::Lawrence if e != 0 => Err(mismatch(
            "lawrence",
            format!("it handles halfspaces only, the body has {e} ellipsoids"),
        )),
        VolumeMethod::Lawrence => match LawrenceProblem::<f64>::from_body(body) {
            Err(Error::Unsupported(why)) => Err(mismatch("lawrence", why)),
            _ => Ok(()),
        },
        VolumeMethod::Hnr if !body.is_convex() => Err(mismatch(
            "hnr",
            "it has an outside ellipsoid, use --method nonconvex".into(),
        )),
        VolumeMethod::Nonconvex if body.is_convex() => Err(mismatch(
            "nonconvex",
            "it has no outside ellipsoid".into(),
        )),
        _ => Ok(()),
    }
}

fn degeneracy_hint(e: Error) -> CliError {
    match e {
        Error::DegenerateInput(msg) => CliError::data(format!(
            "degenerate input: {msg}; perturb the offending offsets z by about 1e-9*|z| and retry"
        )),
        other => other.into(),
    }
}

fn lawrence(
    spec: &BodySpec,
    body: &Body,
    scale: f64,
    backend: BackendArg,
    seed: u64,
) -> CliResult<ExactVolume> {
    match backend {
        BackendArg::Rational => {
            let (p, det) = LawrenceProblem::from_spec(spec).map_err(degeneracy_hint)?;
            let mut v = lawrence_volume(&p, None, seed).map_err(degeneracy_hint)?;
            v.scale_by(&det);
            Ok(v)
        }
        BackendArg::Float => {
            let p = LawrenceProblem::<f64>::from_body(body).map_err(degeneracy_hint)?;
            let mut v = lawrence_volume(&p, None, seed).map_err(degeneracy_hint)?;
            v.value *= scale;
            Ok(v)
        }
    }
}

pub fn cmd_volume(a: &VolumeArgs, seed: u64) -> CliResult<Value> {
    let started = Instant::now();
    let (spec, body, scale) = load_body(&a.body)?;
    let d = body.dim();
    let sampler = SamplerConfig::new(d, seed).with_method(a.sampler.into());
    let (method, auto) = match a.method {
        VolumeMethod::Auto => {
            let (m, why) = auto_method(&body, &sampler)?;
            (m, Some(why))
        }
        m => (m, None),
    };
    check_compatible(method, &body)?;
    let ln_simplex = scale.ln() - ln_factorial(d);
    let mut details = Map::new();
    let estimate = match method {
        VolumeMethod::Varsi => {
            let h = &body.halfspaces()[0];
            let fraction = varsi_fraction(&h.normal, h.offset);
            details.insert("fraction".into(), json!(fraction));
            VolumeEstimate::exact(fraction * ln_simplex.exp(), Method::Varsi)
        }
        VolumeMethod::Lawrence => {
            let backend = a.backend.unwrap_or(if d > 30 {
                BackendArg::Rational
            } else {
                BackendArg::Float
            });
            if backend == BackendArg::Float && d > FLOAT_MAX_DIM {
                return Err(CliError::usage(format!(
                    "the float backend is limited to d <= {FLOAT_MAX_DIM}; use --backend rational"
                )));
            }
            let v = lawrence(&spec, &body, scale, backend, seed)?;
            let est = VolumeEstimate::exact(v.value, Method::Lawrence);
            details.insert(
                "lawrence".into(),
                serde_json::to_value(&v).map_err(json_err)?,
            );
            if let Some(dec) = &v.decimal {
                details.insert("decimal".into(), json!(dec));
            }
            est
        }
        VolumeMethod::Rejection => {
            let reference = Some(ln_simplex.exp());
            let r = match (a.n, a.error) {
                (Some(n), _) => rejection_volume(&body, n, &sampler, reference)?,
                (None, Some(e)) => {
                    let (r, pr) = rejection_volume_for_error(&body, e, &sampler, reference)?;
                    details.insert("confidence".into(), json!(pr));
                    r
                }
                (None, None) => {
                    rejection_volume(&body, DEFAULT_REJECTION_POINTS, &sampler, reference)?
                }
            };
            let mut est =
                VolumeEstimate::exact(r.volume_fraction * ln_simplex.exp(), Method::Rejection);
            est.log_value = r.volume_fraction.ln() + ln_simplex;
            est.rel_std_error = (r.hits > 0).then(|| r.std_error / r.volume_fraction);
            est.empty = r.below_resolution;
            details.insert(
                "rejection".into(),
                serde_json::to_value(&r).map_err(json_err)?,
            );
            est
        }
        VolumeMethod::Hnr | VolumeMethod::Nonconvex => {
            let mut cfg = walk_config(&a.walk, seed)?;
            cfg.allow_high_dim_nonconvex = a.allow_nonconvex_high_d;
            let mut est = if method == VolumeMethod::Hnr {
                volume_hnr(&body, &cfg)?
            } else {
                volume_nonconvex(&body, &cfg)?
            };
            est.value *= scale;
            est.log_value += scale.ln();
            est
        }
        VolumeMethod::Auto => unreachable!("auto is resolved above"),
    };
    let mut out = Map::new();
    out.insert("command".into(), json!("volume"));
    out.insert("method".into(), json!(estimate.method));
    out.insert("requested_method".into(), json!(a.method));
    if let Some(why) = auto {
        out.insert("auto".into(), why);
    }
    out.insert("dimension".into(), json!(d));
    out.insert("seed".into(), json!(seed));
    out.insert("value".into(), json!(estimate.value));
    out.insert("log_value".into(), json!(estimate.log_value));
    out.insert("simplex_volume".into(), json!(ln_simplex.exp()));
    out.insert(
        "estimate".into(),
        serde_json::to_value(&estimate).map_err(json_err)?,
    );
    out.extend(details);
    out.insert(
        "wall_time_seconds".into(),
        json!(started.elapsed().as_secs_f64()),
    );
    Ok(Value::Object(out))
}

pub fn json_err(e: serde_json::Error) -> CliError {
    CliError::new(
        crate::error::Category::Io,
        format!("serializing result: {e}"),
    )
}
