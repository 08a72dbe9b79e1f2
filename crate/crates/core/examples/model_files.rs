//! Write forecasts and observed days to disk, read them back and check the
//! round trip is exact.
//!
//! Run with `cargo run --example model_files`.

use gmm_intraday::io::{read_model, read_profiles, render_model, write_model, write_profiles, Profile};
use gmm_intraday::synthgen::{GeneratorConfig, GroundTruth};
use gmm_intraday::tuning::{build_forecasts, build_synthetic_set};

fn main() -> gmm_intraday::Result<()> {
    let gt = GroundTruth::new(GeneratorConfig {
        horizon: 4,
        seed: 2,
        ..GeneratorConfig::default()
    })?;
    let conditions = gt.conditions(3, 1);
    let forecasts = build_forecasts(&gt, &conditions, 2, 2)?;
    let set = build_synthetic_set(&gt, &conditions, 3);

    let dir = std::env::temp_dir().join(format!("gmm-intraday-model-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| gmm_intraday::Error::io(&dir, e))?;
    write_model(&forecasts, dir.join("model.json"))?;
    let profiles: Vec<Profile> = set
        .instances
        .iter()
        .map(|i| Profile {
            id: i.id.clone(),
            values: i.profile.clone(),
        })
        .collect();
    write_profiles(&profiles, dir.join("profiles.csv"))?;

    let model_back = read_model(dir.join("model.json"))?;
    let profiles_back = read_profiles(dir.join("profiles.csv"))?;
    println!("model round trip exact: {}", model_back == forecasts);
    println!("profile round trip exact: {}", profiles_back == profiles);
    println!(
        "components share one dictionary: {}",
        model_back[0].dictionary().is_some()
    );

    let text = render_model(&model_back)?;
    println!("\nfirst lines of model.json:");
    for line in text.lines().take(12) {
        println!("  {line}");
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
