//! Runs every acceptance criterion at full size and prints one line each.
//! Exits non-zero if any criterion fails.

use ibbm_core::validation::{run_criterion, Sizes, Suite};

const SEED: u64 = 20240101;

fn main() {
    let sizes = Sizes::default();
    let mut failed = Vec::new();
    println!("acceptance suite (seed {SEED})");
    for id in Suite::All.ids() {
        match run_criterion(id, &sizes, SEED) {
            Ok(report) => {
                println!("{}", report.summary_line());
                for check in report.checks.iter().filter(|c| !c.pass) {
                    println!("       failed check {}: statistic {} params {:?}", check.name, check.statistic, check.params);
                }
                if !report.pass {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("[FAIL] {id:>2} error: {e}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", Suite::All.ids().len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
