//! Resolution of preset + overrides into a ScenarioConfig with provenance.

use crate::args::CommonArgs;
use crate::error::{CliError, CliResult};
use crate::output::Provenance;
use rydoa_core::scenario::apply_overrides;
use rydoa_core::{presets, ScenarioConfig};

/// Resolve the scenario a command runs on. `flag_overrides` are the
/// subcommand's dedicated flags already translated to flat scenario keys;
/// `--set` pairs apply after them, so the explicit form wins on conflict.
pub fn resolve(
    common: &CommonArgs,
    command: &'static str,
    default_preset: &str,
    flag_overrides: &[(String, String)],
) -> CliResult<(ScenarioConfig, Provenance)> {
    let preset = common.preset.clone().unwrap_or_else(|| default_preset.to_string());
    let base = presets::by_name(&preset).map_err(CliError::from_resolve)?;

    let mut pairs: Vec<(String, String)> = flag_overrides.to_vec();
    for raw in &common.set {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set expects key=value, got \"{raw}\"")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }

    let sc = apply_overrides(&base, &pairs).map_err(CliError::from_resolve)?;
    sc.validate().map_err(CliError::from_resolve)?;

    let prov = Provenance {
        command,
        preset,
        overrides: pairs.iter().map(|(k, v)| format!("{k}={v}")).collect(),
        seed: common.seed,
    };
    Ok((sc, prov))
}

/// Rayon pool honoring `--jobs`; sweeps run inside `pool.install`.
pub fn thread_pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}
