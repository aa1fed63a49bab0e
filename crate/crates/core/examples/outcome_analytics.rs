//! Agreement similarity, per-question head sets and per-subject gains
//! for an outcome CSV (`question_id[,subject],base,L{l}H{h}...`).
//!
//! ```text
//! cargo run --example outcome_analytics -- [outcomes.csv]
//! ```
//!
//! Without an argument a small built-in table is used.

use sprint::outcomes::{gain_stats, partition_sets, read_outcomes, similarity, GroupBy};

const DEMO: &str = "\
question_id,subject,base,L5H0,L5H1,L10H0,L10H1
q0,algebra,1,1,0,1,0
q1,algebra,0,1,1,0,0
q2,algebra,0,1,0,0,1
q3,biology,1,0,1,1,0
q4,biology,0,0,0,1,0
q5,biology,0,0,1,0,1
";

fn main() -> anyhow::Result<()> {
    let (z, catalog) = match std::env::args().nth(1) {
        Some(path) => sprint::load_outcomes(path)?,
        None => read_outcomes(DEMO.as_bytes(), "<demo>")?,
    };
    println!("{} questions x {} heads", z.n(), z.num_heads());

    let s = similarity(&z);
    let names = catalog.column_names();
    println!("agreement counts (of {}):", s.n());
    println!("{:>7} {}", "", names.iter().map(|c| format!("{c:>6}")).collect::<String>());
    for (j, name) in names.iter().enumerate() {
        let row: String = (0..s.size()).map(|k| format!("{:>6}", s.agreements(j, k))).collect();
        println!("{name:>7} {row}");
    }

    for i in 0..z.n().min(3) {
        let (plus, minus) = partition_sets(&z, i)?;
        println!("{}: solved by {plus:?}, missed by {minus:?}", z.question_ids()[i]);
    }

    let group_by = if z.subjects().is_some() { GroupBy::Subject } else { GroupBy::None };
    print!("{}", gain_stats(&z, group_by)?.summary_csv(&catalog));
    Ok(())
}
