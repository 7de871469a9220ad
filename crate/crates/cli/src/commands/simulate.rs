use std::fmt::Write as _;

use anyhow::Context;
use sparse_fkrige::io::{fmt_real, write_json, write_locations, write_longitudinal};
use sparse_fkrige::simgen::{generate_coefficients, generate_longitudinal};

use super::{create_out_dir, designs};
use crate::args::DesignArgs;
use crate::config::Common;
use crate::failure::usage;

/// Writes `locations.csv` and `observations.csv` for the observed sites,
/// `truth.csv` with every grid site's true coefficients, and `basis.json`.
pub fn run(args: &DesignArgs, replicate: usize, common: &Common) -> anyhow::Result<()> {
    let designs = designs(args, common.seed)?;
    let [design] = designs.as_slice() else {
        return usage("simulate takes a single --n and a single --range");
    };
    create_out_dir(&common.out)?;
    let field = generate_coefficients(design, replicate).context("simulation stage")?;
    let (locations, table) = generate_longitudinal(&field, design, replicate).context("simulation stage")?;
    let out = &common.out;
    write_locations(out.join("locations.csv"), &locations)?;
    write_longitudinal(out.join("observations.csv"), &table)?;
    write_json(out.join("basis.json"), &design.basis()?)?;

    let mut text = String::from("site_id,observed,x1,x2");
    for m in 1..=design.n_basis {
        let _ = write!(text, ",w{m}");
    }
    text.push('\n');
    for (k, site) in field.locations.sites().iter().enumerate() {
        let observed = u8::from(field.observed.binary_search(&k).is_ok());
        let _ = write!(
            text,
            "{},{observed},{},{}",
            site.id,
            fmt_real(site.coords[0]),
            fmt_real(site.coords[1])
        );
        for v in field.truth.row(k).iter() {
            let _ = write!(text, ",{}", fmt_real(*v));
        }
        text.push('\n');
    }
    let path = out.join("truth.csv");
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
