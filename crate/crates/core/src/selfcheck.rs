//! Built-in invariant checks run by `cyclegate selfcheck`.
//!
//! These are quick, seeded versions of the property suites: they need no
//! input files and finish in a few seconds.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::augment::{adjust_brightness, adjust_contrast, adjust_saturation};
use crate::error::{Direction, Result};
use crate::eval::{Polarity, Rates};
use crate::gate::{decide, run_cycle, CycleTrace, Decision, PRIMARY_THRESHOLD};
use crate::raster::{iou, miou, response_rate, BinaryMask, MiouMode, Raster};
use crate::segmenter::{ScriptTable, SegmenterSpec};
use crate::synth::{generate_pair, SynthSpec};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, failures: usize, cases: usize) -> CheckResult {
    CheckResult {
        name,
        passed: failures == 0,
        detail: format!("{failures} violation(s) in {cases} case(s)"),
    }
}

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density))
}

fn pes_identity() -> CheckResult {
    let pes = Rates::new(Some(0.775), Some(0.9175))
        .pes
        .unwrap_or(f64::NAN);
    CheckResult {
        name: "pes-identity",
        passed: (pes - 0.84625).abs() <= 1e-9,
        detail: format!("pes = {pes}"),
    }
}

fn low_miou_rejects() -> Result<CheckResult> {
    let (p_f, m) = (0.977, 0.048);
    let mut failures = 0;
    for k in 0..=1000 {
        let p_r = k as f64 / 1000.0;
        let trace = CycleTrace {
            forward_mask: BinaryMask::full(4, 4),
            forward_score: p_f,
            reverse_mask: BinaryMask::null(4, 4),
            reverse_score: p_r,
            reverse_skipped: false,
            miou: m,
            confidence: p_f * p_r * m,
        };
        let rec = decide("c", &[PRIMARY_THRESHOLD], |_| Ok(trace.clone()))?;
        if trace.confidence >= PRIMARY_THRESHOLD || rec.accepted() || !rec.final_mask.is_null() {
            failures += 1;
        }
    }
    Ok(check("low-miou-rejects", failures, 1001))
}

fn metric_oracle() -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = 2000;
    let mut failures = 0;
    for _ in 0..cases {
        let w = rng.random_range(1..=24);
        let h = rng.random_range(1..=24);
        let d = rng.random_range(0.0..=1.0);
        let a = random_mask(&mut rng, w, h, d);
        let b = random_mask(&mut rng, w, h, d);
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for (&x, &y) in a.bits().iter().zip(b.bits()) {
            match (x, y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        let tn = w * h - tp - fp - fneg;
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let fg = ratio(tp, tp + fp + fneg);
        let bg = ratio(tn, tn + fp + fneg);
        let ok = iou(&a, &b)? == fg
            && miou(&a, &b, MiouMode::ForegroundOnly)? == fg
            && miou(&a, &b, MiouMode::TwoClassMean)? == (fg + bg) / 2.0
            && response_rate(&a) == (tp + fp) as f64 / (w * h) as f64;
        failures += usize::from(!ok);
    }
    Ok(check("metric-oracle", failures, cases))
}

fn gate_invariants() -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (w, h) = (6, 5);
    let support = Raster::filled(w, h, 1, 0)?;
    let query = Raster::filled(w, h, 1, 0)?;
    let cases = 2000;
    let mut failures = 0;
    for k in 0..cases {
        let id = format!("c{k}");
        let mut m_s = random_mask(&mut rng, w, h, 0.4);
        m_s.set(0, 0, true);
        let mut table = ScriptTable::default();
        let fwd_density = if rng.random_bool(0.1) { 0.0 } else { 0.4 };
        let p_f = rng.random_range(0.0..=1.0);
        let p_r = rng.random_range(0.0..=1.0);
        table.insert(
            id.clone(),
            Direction::Forward,
            random_mask(&mut rng, w, h, fwd_density),
            p_f,
        );
        table.insert(
            id.clone(),
            Direction::Reverse,
            random_mask(&mut rng, w, h, 0.4),
            p_r,
        );
        let seg = SegmenterSpec::scripted(table);
        let trace = run_cycle(&seg, &id, &support, &m_s, &query, MiouMode::ForegroundOnly)?;
        let c = trace.confidence;
        let mut ok = c <= trace.forward_score.min(trace.reverse_score).min(trace.miou)
            && c == trace.forward_score * trace.reverse_score * trace.miou;
        if trace.reverse_skipped {
            ok &= c == 0.0 && trace.reverse_mask.is_null();
        }
        let tau = rng.random_range(0.0..=1.0);
        let rec = decide(&id, &[tau], |_| Ok(trace.clone()))?;
        ok &= rec.accepted() == (c >= tau);
        ok &= match rec.decision {
            Decision::Accepted => rec.final_mask == trace.forward_mask,
            Decision::Rejected => rec.final_mask.is_null(),
        };
        let open = decide(&id, &[0.0], |_| Ok(trace.clone()))?;
        ok &= open.accepted() && open.final_mask == trace.forward_mask;
        failures += usize::from(!ok);
    }
    Ok(check("gate-invariants", failures, cases))
}

fn self_match() -> Result<CheckResult> {
    let spec = SynthSpec::default();
    let seg = SegmenterSpec::reference();
    let cases = 20;
    let mut failures = 0;
    let mut worst = 1.0f64;
    for i in 0..cases {
        let p = generate_pair(crate::synth::DEFAULT_SEED, i, Polarity::Positive, &spec)?;
        let t = run_cycle(
            &seg,
            &p.pair_id,
            &p.support_image,
            &p.support_mask,
            &p.support_image,
            MiouMode::ForegroundOnly,
        )?;
        let restored = iou(&p.support_mask, &t.reverse_mask)?;
        worst = worst.min(t.confidence);
        failures += usize::from(restored < 0.99 || t.confidence < 0.95);
    }
    let mut r = check("self-match", failures, cases);
    r.detail
        .push_str(&format!(", lowest confidence {worst:.5}"));
    Ok(r)
}

fn augment_ranges() -> Result<CheckResult> {
    let mut failures = 0;
    let mut cases = 0;
    for v in 0..=255u8 {
        let one = Raster::gray(1, 1, vec![v])?;
        let pair = Raster::gray(2, 1, vec![v, 255 - v])?;
        let rgb = Raster::rgb(1, 1, vec![v, 255 - v, v / 2])?;
        for f in [0.8, 1.0, 1.2] {
            cases += 1;
            let b = adjust_brightness(&one, f)?.samples()[0];
            let expect = (f64::from(v) * f).round().min(255.0) as u8;
            let mut ok = b == expect;
            if f == 1.0 {
                ok &= adjust_contrast(&pair, f)? == pair
                    && adjust_saturation(&rgb, f)? == rgb
                    && b == v;
            }
            failures += usize::from(!ok);
        }
    }
    Ok(check("augment-ranges", failures, cases))
}

/// Runs every built-in check; `Err` only for unexpected internal failures.
pub fn run_all() -> Result<Vec<CheckResult>> {
    Ok(vec![
        pes_identity(),
        low_miou_rejects()?,
        metric_oracle()?,
        gate_invariants()?,
        self_match()?,
        augment_ranges()?,
    ])
}
