//! A small coverage study. The same config text works with `bootlin simulate`.

use bootlin::sim::{run_study, SimConfig};

const CONFIG: &str = "
n_grid = 100, 400
mc_reps = 40
B = 100
constructions = onestep, plugin
schemes = empirical, smooth
methods = wald, perc, efron
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cfg, _) = SimConfig::parse(CONFIG, &[("seed".into(), "1".into())])?;
    print!("{}", run_study(&cfg)?.to_csv());
    Ok(())
}
