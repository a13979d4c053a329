//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::panic;
use std::process::Command;
use std::time::{Duration, Instant};

use arena_ad::matrix::ColPivQr;
use arena_ad::ode::{coupled_for_both, coupled_for_initials, coupled_for_params, jacobians_of_rhs};
use arena_ad::prob::normal_log_stats;
use arena_ad::{
    dot_product, fd_gradient, gradient, gradient_with, independent, independents, integrate_ode,
    log, log_determinant, log_sum_exp, normal_log, pow, square, sum, value_of, BroadcastArg,
    DropConstants, Matrix, OdeSystem, Real, Rk45Options, Tape, Var,
};
use arena_ad_bench::{read_rows, registry, run_sweep, verify, Engine, SweepConfig};
use rand::{rngs::StdRng, Rng, SeedableRng};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn within(limit: Duration, start: Instant, what: &str) -> Outcome {
    let took = start.elapsed();
    check!(took < limit, "{what} took {took:?}, limit {limit:?}");
    Ok(())
}

// 1 ------------------------------------------------------------------------

fn intro_example() -> Outcome {
    let start = Instant::now();
    let (value, grad) = gradient(|v| Ok::<_, ()>(v[0] * v[1] / 2.0), &[6.0, 4.0]).unwrap();
    within(Duration::from_millis(1), start, "gradient")?;
    check!(close(value, 12.0, 1e-15), "value {value}");
    check!(
        close(grad[0], 2.0, 1e-15) && close(grad[1], 3.0, 1e-15),
        "gradient {grad:?}"
    );
    Ok(())
}

// 2 ------------------------------------------------------------------------

const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Closed-form log density and its (μ, σ) partials.
fn normal_oracle(y: f64, mu: f64, sigma: f64) -> (f64, f64, f64) {
    let z = (y - mu) / sigma;
    (
        -HALF_LOG_TWO_PI - sigma.ln() - 0.5 * z * z,
        z / sigma,
        (z * z - 1.0) / sigma,
    )
}

/// Log likelihood of fixed observations as a function of (μ, σ), written
/// once for plain and variable scalars.
struct NormalLl<'a> {
    y: &'a [f64],
}

impl NormalLl<'_> {
    fn eval<T: Real>(&self, theta: &[T]) -> T {
        let (mu, sigma) = (theta[0], theta[1]);
        let mut lp = mu.lift(0.0);
        for &y in self.y {
            let z = (mu.lift(y) - mu) / sigma;
            lp += -(sigma.ln()) - z.square() * 0.5 - HALF_LOG_TWO_PI;
        }
        lp
    }
}

fn normal_density() -> Outcome {
    let (y, mu0, sigma0) = (1.3, 0.5, 1.2);
    let (ov, og_mu, og_sigma) = normal_oracle(y, mu0, sigma0);
    check!(close(ov, -1.323482, 1e-6), "oracle value {ov}");
    check!(
        close(og_mu, 0.555556, 1e-6) && close(og_sigma, -0.462963, 1e-6),
        "oracle gradient"
    );

    let mut results = Vec::new();

    // direct operations, step by step
    let tape = Tape::new();
    let mu = independent(&tape, mu0);
    let sigma = independent(&tape, sigma0);
    let mut lp = tape.constant(0.0);
    lp -= 0.5 * (2.0 * std::f64::consts::PI).ln();
    lp -= log(sigma);
    lp -= 0.5 * pow((y - mu) / sigma, 2.0);
    arena_ad::sweep(&tape, lp.id());
    results.push(("direct", lp.value(), mu.adjoint(), sigma.adjoint()));

    // functor through the gradient functional
    let f = NormalLl { y: &[y] };
    let (v, g) = gradient(|t| Ok::<_, ()>(f.eval(t)), &[mu0, sigma0]).unwrap();
    check!(
        close(f.eval(&[mu0, sigma0]), v, 1e-15),
        "functor plain vs ad value"
    );
    results.push(("functor", v, g[0], g[1]));

    // vectorized density, all constants kept
    let (v, g) = gradient(
        |t| normal_log(DropConstants::FULL, y, t[0], t[1]).map(|lp| lp.to_var(t[0].tape())),
        &[mu0, sigma0],
    )
    .map_err(|e| e.to_string())?;
    results.push(("vectorized", v, g[0], g[1]));

    for (path, v, gm, gs) in results {
        check!(close(v, ov, 1e-6), "{path}: value {v} vs {ov}");
        check!(close(gm, og_mu, 1e-6), "{path}: d/dmu {gm} vs {og_mu}");
        check!(
            close(gs, og_sigma, 1e-6),
            "{path}: d/dsigma {gs} vs {og_sigma}"
        );
    }

    // three observations, oracle summed
    let ys = [1.3, 2.7, -1.9];
    let f = NormalLl { y: &ys };
    let (v, g) = gradient(|t| Ok::<_, ()>(f.eval(t)), &[1.3, 2.9]).unwrap();
    let (ev, em, es) = ys
        .iter()
        .map(|&yi| normal_oracle(yi, 1.3, 2.9))
        .fold((0.0, 0.0, 0.0), |acc, t| {
            (acc.0 + t.0, acc.1 + t.1, acc.2 + t.2)
        });
    check!(
        close(v, ev, 1e-12) && close(g[0], em, 1e-12) && close(g[1], es, 1e-12),
        "three observations"
    );
    Ok(())
}

// 3 ------------------------------------------------------------------------

fn fd_oracle_suite() -> Outcome {
    let start = Instant::now();
    let reports = verify(None, &[1, 2, 8, 64]).map_err(|e| e.to_string())?;
    check!(
        reports.len() == 40,
        "expected 40 reports, got {}",
        reports.len()
    );
    for r in &reports {
        check!(
            r.max_error <= 1e-5,
            "{} at dim {}: error {:e}",
            r.functor,
            r.dim,
            r.max_error
        );
    }
    within(Duration::from_secs(30), start, "suite")
}

// 4 ------------------------------------------------------------------------

fn node_counts() -> Outcome {
    let tape = Tape::new();
    let xs = independents(&tape, &[0.5; 100]);
    let ys = independents(&tape, &[1.5; 100]);
    let delta = |f: &dyn Fn()| {
        let before = tape.len();
        f();
        tape.len() - before
    };

    let n = delta(&|| {
        sum(&xs);
    });
    check!(n == 1, "sum added {n}");
    let n = delta(&|| {
        let mut acc = xs[0];
        for x in &xs[1..] {
            acc += *x;
        }
    });
    check!(n == 99, "naive sum added {n}");

    let n = delta(&|| {
        dot_product(&xs, &ys).unwrap();
    });
    check!(n == 1, "dot product added {n}");
    let n = delta(&|| {
        let mut acc = xs[0] * ys[0];
        for i in 1..100 {
            acc += xs[i] * ys[i];
        }
    });
    check!(n == 199, "naive dot product added {n}");

    let mu = independent(&tape, 0.1);
    let sigma = independent(&tape, 2.0);
    let data: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
    let before = tape.len();
    let lp = normal_log(DropConstants::FULL, &data, mu, sigma).map_err(|e| e.to_string())?;
    check!(
        tape.len() - before == 1,
        "normal_log added {}",
        tape.len() - before
    );
    check!(
        tape.rule(lp.as_var().unwrap().id()) == arena_ad::Rule::Precomputed,
        "normal_log node is not precomputed"
    );

    let v = xs[3];
    let square_count = delta(&|| {
        square(v);
    });
    let pow_count = delta(&|| {
        pow(v, 2.0);
    });
    check!(
        pow_count == square_count,
        "pow(v, 2) added {pow_count}, square added {square_count}"
    );
    let n = delta(&|| {
        pow(v, 1.0);
    });
    check!(n == 0, "pow(v, 1) added {n}");
    Ok(())
}

// 5 ------------------------------------------------------------------------

fn slot<'a, 't>(vars: bool, xs: &'a [Var<'t>], values: &'a [f64]) -> BroadcastArg<'a, 't> {
    match (vars, xs.len()) {
        (true, 1) => BroadcastArg::Var(xs[0]),
        (true, _) => BroadcastArg::Vars(xs),
        (false, 1) => BroadcastArg::Real(values[0]),
        (false, _) => BroadcastArg::Reals(values),
    }
}

/// Density of `[y0, y1, y2, μ, σ]` with variable pattern bits (y, μ, σ).
fn patterned_density(policy: DropConstants, pattern: u8, x: &[f64]) -> (f64, Vec<f64>) {
    gradient(
        |v| {
            let y = slot(pattern & 1 != 0, &v[..3], &x[..3]);
            let mu = slot(pattern & 2 != 0, &v[3..4], &x[3..4]);
            let sigma = slot(pattern & 4 != 0, &v[4..], &x[4..]);
            normal_log(policy, y, mu, sigma).map(|lp| lp.to_var(v[0].tape()))
        },
        x,
    )
    .unwrap()
}

fn propto_semantics() -> Outcome {
    let p1 = [0.3, -1.1, 2.0, 0.4, 1.7];
    let p2 = [-0.8, 0.6, 1.3, -0.2, 0.9];
    for pattern in 0..8u8 {
        let (full1, g_full) = patterned_density(DropConstants::FULL, pattern, &p1);
        let (prop1, g_prop) = patterned_density(DropConstants::PROPTO, pattern, &p1);
        for (a, b) in g_full.iter().zip(&g_prop) {
            check!(
                close(*a, *b, 1e-15),
                "pattern {pattern}: gradients {g_full:?} vs {g_prop:?}"
            );
        }
        // move only the variable arguments
        let mut q = p1;
        for (bit, range) in [(1u8, 0..3), (2, 3..4), (4, 4..5)] {
            if pattern & bit != 0 {
                q[range.clone()].copy_from_slice(&p2[range]);
            }
        }
        let (full2, _) = patterned_density(DropConstants::FULL, pattern, &q);
        let (prop2, _) = patterned_density(DropConstants::PROPTO, pattern, &q);
        let drift = ((full1 - prop1) - (full2 - prop2)).abs();
        check!(
            drift <= 1e-12,
            "pattern {pattern}: dropped amount drifts by {drift:e}"
        );
    }

    let tape = Tape::new();
    let before = tape.len();
    let lp =
        normal_log(DropConstants::PROPTO, &[0.1, 0.2][..], 0.0, 1.0).map_err(|e| e.to_string())?;
    check!(
        lp.value() == 0.0 && lp.as_var().is_none(),
        "all-constant value {lp:?}"
    );
    check!(tape.len() == before, "tape changed");

    let mu = independent(&tape, 0.0);
    let (_, stats) = normal_log_stats(
        DropConstants::PROPTO,
        BroadcastArg::Real(1.0),
        mu.into(),
        2.0.into(),
    )
    .map_err(|e| e.to_string())?;
    check!(stats.log_evaluations == 0, "constant sigma still logged");
    Ok(())
}

// 6 ------------------------------------------------------------------------

fn log_determinant_criterion() -> Outcome {
    let tape = Tape::new();
    for n in [1, 3, 6] {
        let m = Matrix::from_fn(n, n, |i, j| {
            independent(&tape, if i == j { 1.0 } else { 0.0 })
        });
        let ld = log_determinant(&m).map_err(|e| e.to_string())?;
        tape.zero_adjoints();
        arena_ad::sweep(&tape, ld.id());
        check!(
            ld.value().abs() <= 1e-14,
            "log det of I_{n} = {}",
            ld.value()
        );
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                check!(
                    close(m.get(i, j).adjoint(), expect, 1e-14),
                    "identity gradient ({i},{j})"
                );
            }
        }
    }

    let (v, g) = gradient(
        |x| log_determinant(&Matrix::from_row_major(2, 2, x.to_vec())?),
        &[2.0, 0.0, 0.0, 3.0],
    )
    .map_err(|e| e.to_string())?;
    check!(close(v, 6f64.ln(), 1e-14), "diag value {v}");
    let expect = [0.5, 0.0, 0.0, 1.0 / 3.0];
    for (a, b) in g.iter().zip(&expect) {
        check!(close(*a, *b, 1e-14), "diag gradient {g:?}");
    }

    let mut rng = StdRng::seed_from_u64(20240917);
    let x: Vec<f64> = (0..25)
        .map(|k| rng.gen_range(-1.0..1.0) + if k % 6 == 0 { 4.0 } else { 0.0 })
        .collect();
    let (_, ad) = gradient(
        |v| log_determinant(&Matrix::from_row_major(5, 5, v.to_vec())?),
        &x,
    )
    .map_err(|e| e.to_string())?;
    let fd = fd_gradient(
        |v| {
            ColPivQr::new(&Matrix::from_row_major(5, 5, v.to_vec()).unwrap())
                .unwrap()
                .log_abs_determinant()
        },
        &x,
    );
    let scale = fd.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    for (a, b) in ad.iter().zip(&fd) {
        check!((a - b).abs() / scale <= 1e-6, "5x5 gradient {a} vs fd {b}");
    }
    Ok(())
}

// 7 ------------------------------------------------------------------------

struct Oscillator;

impl OdeSystem for Oscillator {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        1
    }
    fn rhs<T: Real>(&self, _t: f64, y: &[T], theta: &[T]) -> arena_ad::Result<Vec<T>> {
        Ok(vec![y[1], -(theta[0] * y[0])])
    }
}

fn ode_criterion() -> Outcome {
    let start = Instant::now();
    let theta0 = 0.35;
    let w = theta0.sqrt();
    let ts: Vec<f64> = (1..=10).map(f64::from).collect();
    let tape = Tape::new();
    let theta = [independent(&tape, theta0)];
    let y0 = [independent(&tape, -1.0), independent(&tape, 0.0)];
    let sol = integrate_ode(&Oscillator, &y0, 0.0, &ts, &theta, &Rk45Options::default())
        .map_err(|e| e.to_string())?;

    for p in &sol {
        let t = p.t;
        let (s, c) = ((w * t).sin(), (w * t).cos());
        let y1 = p.y[0].as_var().unwrap();
        let y2 = p.y[1].as_var().unwrap();
        check!(
            close(y1.value(), -c, 1e-6),
            "y1({t}) = {} vs {}",
            y1.value(),
            -c
        );
        check!(
            close(y2.value(), w * s, 1e-6),
            "y2({t}) = {} vs {}",
            y2.value(),
            w * s
        );

        let p1 = tape.payload(y1.id());
        let p2 = tape.payload(y2.id());
        check!(
            p1.len() == 3 && p2.len() == 3,
            "expected N + K = 3 partials"
        );
        let expect1 = [t * s / (2.0 * w), c, s / w];
        let expect2 = [s / (2.0 * w) + t * c / 2.0, -w * s, c];
        for k in 0..3 {
            check!(
                close(p1[k], expect1[k], 1e-4),
                "dy1/d[{k}] at {t}: {} vs {}",
                p1[k],
                expect1[k]
            );
            check!(
                close(p2[k], expect2[k], 1e-4),
                "dy2/d[{k}] at {t}: {} vs {}",
                p2[k],
                expect2[k]
            );
        }
    }

    let sizes = [
        coupled_for_params(&Oscillator, &tape, &[theta0]).size(),
        coupled_for_initials(&Oscillator, &tape, &[theta0]).size(),
        coupled_for_both(&Oscillator, &tape, &[theta0]).size(),
    ];
    check!(sizes == [4, 6, 8], "coupled sizes {sizes:?}");
    within(Duration::from_secs(5), start, "ode")
}

// 8 ------------------------------------------------------------------------

fn nested_hygiene() -> Outcome {
    let x = [1.2, -0.7, 0.35];

    // Jacobian entries enter the outer computation as constants; computing
    // them nested on the same tape must not change the outer gradient.
    let outer = |nested: bool| {
        let restored = std::cell::Cell::new(true);
        let scratch = Tape::new();
        let result = gradient(
            |v| {
                let tape = v[0].tape();
                let mut acc = v[0] * v[1];
                for _ in 0..3 {
                    let before = tape.len();
                    let host = if nested { tape } else { &scratch };
                    let j = jacobians_of_rhs(
                        host,
                        &Oscillator,
                        0.0,
                        &[value_of(acc), 1.0],
                        &[v[2].value()],
                    )?;
                    restored.set(restored.get() && tape.len() == before);
                    acc = acc * j.dfdtheta[1] + v[2] * j.dfdy[2] + log(v[2]);
                }
                Ok::<_, arena_ad::AdError>(acc)
            },
            &x,
        )
        .unwrap();
        (result, restored.get())
    };
    let ((v_ref, g_ref), _) = outer(false);
    let ((v_nest, g_nest), restored) = outer(true);
    check!(restored, "ambient tape length changed across an episode");
    check!(close(v_ref, v_nest, 1e-12), "value {v_nest} vs {v_ref}");
    for (a, b) in g_nest.iter().zip(&g_ref) {
        check!(close(*a, *b, 1e-12), "gradient {g_nest:?} vs {g_ref:?}");
    }

    // An integration inside a larger computation versus on its own tape.
    let opts = Rk45Options::default();
    let solve = |v: &[Var<'_>]| -> arena_ad::Result<f64> {
        let sol = integrate_ode(&Oscillator, &[-1.0, 0.0], 0.0, &[2.0], &v[..1], &opts)?;
        let y = sol[0].y[0].as_var().unwrap();
        arena_ad::sweep(v[0].tape(), y.id());
        Ok(v[0].adjoint())
    };
    let fresh = Tape::new();
    let reference = solve(&[independent(&fresh, 0.35)]).map_err(|e| e.to_string())?;
    let busy = Tape::new();
    let noise = independents(&busy, &[0.1, 0.2, 0.3]);
    let _ = sum(&noise);
    let theta = independent(&busy, 0.35);
    let _ = exp_chain(theta);
    let embedded = solve(&[theta]).map_err(|e| e.to_string())?;
    check!(
        close(embedded, reference, 1e-12),
        "embedded {embedded} vs fresh {reference}"
    );
    Ok(())
}

fn exp_chain(v: Var<'_>) -> Var<'_> {
    arena_ad::exp(v * 0.5) + v
}

// 9 ------------------------------------------------------------------------

fn memory_lifecycle() -> Outcome {
    let mut tape = Tape::with_block_size(1024);
    let ok = gradient_with(
        &mut tape,
        |v| Ok::<_, ()>(v[0] * v[1] + square(v[0])),
        &[1.0, 2.0],
    );
    check!(
        ok.is_ok() && tape.is_empty(),
        "tape not recovered after success"
    );

    let err = gradient_with(
        &mut tape,
        |v| -> Result<Var<'_>, String> {
            let _ = v[0] * v[1];
            Err("bad input".into())
        },
        &[1.0, 2.0],
    );
    check!(
        err.is_err() && tape.is_empty(),
        "tape not recovered after error"
    );

    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let caught = panic::catch_unwind(panic::AssertUnwindSafe(|| {
        let _ = gradient_with(
            &mut tape,
            |v| -> Result<Var<'_>, ()> {
                let _ = v[0] + 1.0;
                panic!("functor failure")
            },
            &[1.0],
        );
    }));
    panic::set_hook(hook);
    check!(
        caught.is_err() && tape.is_empty(),
        "tape not recovered after panic"
    );

    // grow well past one block, then check the lifecycle
    let fresh_reserved = Tape::with_block_size(1024).reserved_bytes();
    {
        let xs = independents(&tape, &(0..500).map(f64::from).collect::<Vec<_>>());
        let _ = dot_product(&xs, &xs);
        let _ = sum(&xs);
        let _ = log_sum_exp(&xs);
        let mut acc = xs[0];
        for x in &xs {
            acc = acc * 0.5 + *x;
        }
        for id in tape.ids() {
            let (ops, payload) = tape.regions(id);
            for r in [ops, payload] {
                check!(
                    r.offset() % 8 == 0,
                    "region offset {} at node {id}",
                    r.offset()
                );
                check!(
                    (tape.region_ptr(r) as usize).is_multiple_of(8),
                    "unaligned address at node {id}"
                );
            }
        }
    }
    let reserved = tape.reserved_bytes();
    check!(reserved > fresh_reserved, "arena did not grow");
    tape.recover();
    check!(
        tape.reserved_bytes() == reserved,
        "recover changed reserved bytes"
    );
    check!(
        tape.used_bytes() == 0 && tape.is_empty(),
        "recover left data"
    );
    tape.free_all();
    check!(
        tape.reserved_bytes() == fresh_reserved,
        "free_all kept {} bytes",
        tape.reserved_bytes()
    );
    Ok(())
}

// 10 -----------------------------------------------------------------------

fn stability() -> Outcome {
    let (v, g) = gradient(log_sum_exp, &[1000.0, 1000.0]).map_err(|e| e.to_string())?;
    check!(close(v, 1000.0 + 2f64.ln(), 1e-12), "value {v}");
    check!(
        g.iter().all(|d| d.is_finite() && close(*d, 0.5, 1e-12)),
        "gradient {g:?}"
    );

    let base = [0.3, -1.2, 2.5, 0.0];
    let (v0, g0) = gradient(log_sum_exp, &base).map_err(|e| e.to_string())?;
    for c in [-1000.0, -37.5, 1e-3, 250.0, 1000.0] {
        let shifted: Vec<f64> = base.iter().map(|x| x + c).collect();
        let (v1, g1) = gradient(log_sum_exp, &shifted).map_err(|e| e.to_string())?;
        check!(
            (v1 - (v0 + c)).abs() <= 1e-12 * v1.abs().max(1.0),
            "shift {c}: {v1} vs {}",
            v0 + c
        );
        for (a, b) in g0.iter().zip(&g1) {
            check!(
                close(*a, *b, 1e-12),
                "shift {c}: gradients {g0:?} vs {g1:?}"
            );
        }
    }
    Ok(())
}

// 11 -----------------------------------------------------------------------

fn harness_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("sweep.csv");
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(["run", "--calls", "1000", "--max-dim", "16384", "--out"])
        .arg(&path)
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check!(status.success(), "bench run exited with {status}");
    check!(took < Duration::from_secs(600), "bench run took {took:?}");

    let rows = read_rows(std::fs::File::open(&path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    check!(rows.len() == 10 * 15 * 2, "{} rows", rows.len());
    for f in registry() {
        for engine in [Engine::Ad, Engine::Plain] {
            let count = rows
                .iter()
                .filter(|r| r.functor == f.name() && r.engine == engine)
                .count();
            check!(count == 15, "{} {engine}: {count} rows", f.name());
        }
    }
    check!(
        rows.iter()
            .all(|r| r.calls == 1000 && r.total_seconds >= 0.0),
        "malformed row"
    );

    // value agreement, one call per size
    let config = SweepConfig {
        functor: None,
        max_dim: 16384,
        calls: 1,
        progress: false,
    };
    let records = run_sweep(&config, std::io::sink()).map_err(|e| e.to_string())?;
    for pair in records.chunks(2) {
        let (ad, plain) = (&pair[0], &pair[1]);
        check!(
            ad.row.engine == Engine::Ad && plain.row.engine == Engine::Plain,
            "row order"
        );
        let rel = (ad.value - plain.value).abs() / plain.value.abs().max(1.0);
        check!(
            rel <= 1e-12,
            "{} dim {}: ad {} vs plain {}",
            ad.row.functor,
            ad.row.dim,
            ad.value,
            plain.value
        );
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("intro example value and gradient", intro_example),
        ("normal density against closed form", normal_density),
        (
            "functor gradients against finite differences",
            fd_oracle_suite,
        ),
        ("node-count contracts", node_counts),
        ("drop-constants semantics", propto_semantics),
        ("log determinant", log_determinant_criterion),
        ("ODE states and sensitivities", ode_criterion),
        ("nested differentiation hygiene", nested_hygiene),
        ("memory lifecycle", memory_lifecycle),
        ("log-sum-exp stability", stability),
        ("benchmark sweep", harness_sweep),
    ];
    let mut failures = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {title} ({took:.2?})", i + 1),
            Err(e) => {
                failures += 1;
                println!("criterion {:>2}: FAIL  {title}: {e}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
