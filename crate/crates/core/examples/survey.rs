//! Surveys network files given on the command line.
//!
//! ```text
//! cargo run --release --example survey -- crates/core/fixtures/toggle.net
//! ```

use std::time::Instant;

use regdyn::algebra::Solver;
use regdyn::network::RegulatoryNetwork;
use regdyn::paramgraph::ParameterGraph;
use regdyn::stats::survey_all;

fn main() {
    let solver = Solver::default();
    for path in std::env::args().skip(1) {
        let text = std::fs::read_to_string(&path).expect("readable network file");
        let net = RegulatoryNetwork::parse(&text).expect("valid network");
        let start = Instant::now();
        let pg = ParameterGraph::build(&net, &solver).expect("parameter graph");
        let row = survey_all(&pg, &path).expect("survey");
        print!("{row}");
        println!(
            "exact: fc {:.4} pc {:.4} fp {:.4} {:.4} {:.4} {:.4} {:.4}  ({:.1?})\n",
            row.fc_percent(),
            row.pc_percent(),
            row.fp_percent(0),
            row.fp_percent(1),
            row.fp_percent(2),
            row.fp_percent(3),
            row.fp_percent(4),
            start.elapsed()
        );
    }
}
