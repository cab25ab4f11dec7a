//! Combining an external log-likelihood with bpp into `cpx = nll - bpp`
//! and ranking the result in both directions.
//!
//!     cargo run --example cpx_ranking

use entropy_coreset::{cpx_columns, rank, top_m, Order, ScoreTable};

fn main() -> entropy_coreset::Result<()> {
    let ids: Vec<String> = ["beach", "street", "forest", "studio", "crowd"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut table = ScoreTable::new(ids.clone());
    table.set_column("nll", vec![3.1, 5.2, 5.9, 1.4, 6.3], Some("generative model, bits/pixel".into()))?;
    table.set_column("bpp", vec![2.0, 4.8, 6.1, 0.6, 5.0], Some("jpeg q100 4:4:4".into()))?;

    let cpx = cpx_columns(table.column("nll").unwrap(), table.column("bpp").unwrap())?;
    table.set_column("cpx", cpx.clone(), Some("nll - bpp".into()))?;

    for (id, v) in ids.iter().zip(&cpx) {
        println!("{id:<8} cpx {v:+.2}");
    }
    for order in [Order::Descending, Order::Ascending] {
        let sel = top_m(&rank(&cpx, order)?.with_name("cpx"), 3)?.with_ids(&ids)?;
        let picked: Vec<&str> = sel.entries.iter().map(|e| e.id.as_str()).collect();
        println!("top 3 by cpx {order}: {picked:?}");
    }

    let out = std::env::temp_dir().join("cpx_ranking_example.csv");
    table.write(&out)?;
    println!("table written to {}", out.display());
    Ok(())
}
