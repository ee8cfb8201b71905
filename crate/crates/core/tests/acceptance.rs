//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.

use std::process::ExitCode;
use std::time::Instant;

use ikn_core::checks::run_suite;
use ikn_core::scenarios::*;
use ikn_core::Backend;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, passed: bool, detail: String) {
        if !passed {
            self.failed += 1;
        }
        println!("{} {id:<4} {name:<48} {detail}", if passed { "PASS" } else { "FAIL" });
    }

    fn at_most(&mut self, id: &str, name: &str, value: f64, tol: f64) {
        self.line(id, name, value <= tol, format!("{value:.3e} (tol {tol:.1e})"));
    }

    fn within(&mut self, id: &str, name: &str, value: f64, lo: f64, hi: f64) {
        self.line(id, name, (lo..=hi).contains(&value), format!("{value:.4} (range [{lo}, {hi}])"));
    }
}

fn suite_id(name: &str) -> &'static str {
    if name.starts_with("gradient") {
        "C5"
    } else if name.starts_with("phase") {
        "C2"
    } else if name.starts_with("normalisation") {
        "C6"
    } else if name.starts_with("single-bond") {
        "C7"
    } else if name.starts_with("exact-zero") {
        "C8"
    } else {
        "C10"
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut r = Report { failed: 0 };

    for (label, backend) in [("NH", Backend::Nh), ("APR", Backend::Apr)] {
        match lj_cluster_drift(backend) {
            Ok(d) => {
                r.at_most("C1", &format!("{label} LJ8 relative drift, 1e4 steps"), d.coarse, 1e-5);
                r.within("C1", &format!("{label} drift ratio on halving the step"), d.ratio(), 3.0, 5.0);
            }
            Err(e) => r.line("C1", label, false, e.to_string()),
        }
    }

    match run_suite() {
        Ok(outcomes) => {
            for o in outcomes {
                r.line(suite_id(&o.name), &o.name, o.passed, format!("{:.3e} (tol {:.1e})", o.value, o.tolerance));
            }
        }
        Err(e) => r.line("C2", "verification suite", false, e.to_string()),
    }

    match nh_kinetic_temperature() {
        Ok(t) => r.at_most("C3", &format!("NH kinetic temperature {:.4} ± {:.4}, |T - 1|", t.mean, t.stderr), (t.mean - 1.0).abs(), 0.05),
        Err(e) => r.line("C3", "NH kinetic temperature", false, e.to_string()),
    }

    match apr_hydrostatic_cell() {
        Ok(c) => r.at_most("C4", &format!("APR mean cell vs lambda = {}", c.lambda), c.relative_error(), 0.02),
        Err(e) => r.line("C4", "APR mean cell", false, e.to_string()),
    }

    match dimer_convergence(&[64, 256, 1024]) {
        Ok(fits) => {
            for (name, fit) in fits {
                r.within("C9", &format!("{name} residual slope vs M"), fit.slope, -0.7, -0.3);
            }
        }
        Err(e) => r.line("C9", "dimer convergence", false, e.to_string()),
    }
    match manufactured_ratios() {
        Ok(ratios) => {
            for (name, ratio) in ratios {
                r.within("C9", &format!("{name} manufactured error ratio, h/2"), ratio, 3.5, 4.5);
            }
        }
        Err(e) => r.line("C9", "manufactured convergence", false, e.to_string()),
    }

    match energy_mode_comparison(16, 64) {
        Ok(c) => r.at_most(
            "C11",
            &format!("energy modes {:.4e} vs {:.4e}, |diff| / 2SE", c.collective.mean, c.distributed.mean),
            c.difference() / (2.0 * c.stderr()),
            1.0,
        ),
        Err(e) => r.line("C11", "energy mode consistency", false, e.to_string()),
    }

    println!("{} failed, {:.1} s", r.failed, start.elapsed().as_secs_f64());
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
