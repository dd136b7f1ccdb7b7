use shellpath::bench;
use shellpath::continuation::run_continuation;
use shellpath::problem::ShellSystem;
use std::io::Write;

#[test]
#[ignore]
fn dbg_airbag() {
    let mut log = std::fs::File::create("/tmp/airbag_probe.log").unwrap();
    let t0 = std::time::Instant::now();
    let b = bench::airbag(0);
    let sys = ShellSystem::from_benchmark(&b).unwrap();
    let config = b.continuation.clone();
    let hist = run_continuation(&sys, &config, |r| {
        writeln!(log, "step {} kappa {:.4} maxu {:.5} iters {} eig1 {:.3e} t {:?}",
            r.step, r.kappa, r.max_disp, r.newton_iterations,
            r.eigenvalues.first().copied().unwrap_or(f64::NAN), t0.elapsed()).unwrap();
        log.flush().unwrap();
    });
    match hist {
        Ok(h) => {
            let last = h.records.last().unwrap();
            writeln!(log, "DONE {} steps failed {} reason {:?} p {:.1} maxu {:.5} t {:?}",
                h.records.len(), h.failed_steps, h.stop_reason, last.pressure, last.max_disp, t0.elapsed()).unwrap();
            // diagonal u_z curvature sign changes
            let u_full = sys.expand(&last.u);
            let n = 16usize;
            let mut uz = Vec::new();
            for e in (0..n * n).step_by(n + 1) {
                for &t in &[0.25, 0.75] {
                    let s = sys.model.sample_point(e, t, t, &u_full).unwrap();
                    uz.push(s.disp.z);
                }
            }
            let mut signs = 0;
            let mut prev = 0.0;
            for w in uz.windows(3) {
                let c = w[0] - 2.0 * w[1] + w[2];
                if prev != 0.0 && c * prev < 0.0 { signs += 1; }
                if c != 0.0 { prev = c; }
            }
            writeln!(log, "diagonal curvature sign changes: {signs}").unwrap();
        }
        Err(e) => writeln!(log, "ERR {e}").unwrap(),
    }
}
