//! Generator specs such as `interval:length=1,n=5` or
//! `tree:depth=2,branching=2,levels=2/0.5`.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::metric::FiniteMetricSpace;
use crate::spaces::{self, CircleMetric};
use crate::ultra;

use super::CliError;

pub const GENERATORS: &[&str] = &[
    "interval",
    "cantor",
    "circle",
    "sierpinski",
    "grid2d",
    "random",
    "tree",
];

/// True when `input` names a generator rather than a file.
pub fn is_generator_spec(input: &str) -> bool {
    let name = input.split(':').next().unwrap_or_default();
    input.contains(':') && GENERATORS.contains(&name)
}

struct Params {
    generator: String,
    values: BTreeMap<String, String>,
}

impl Params {
    fn parse(spec: &str) -> Result<Self, CliError> {
        let (generator, rest) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("generator spec `{spec}` has no `:`")))?;
        let mut values = BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("expected key=value, got `{pair}`")))?;
            if values.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("duplicate key `{}`", k.trim())));
            }
        }
        Ok(Params {
            generator: generator.to_string(),
            values,
        })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("{}: cannot parse {key}=`{v}`", self.generator))
            }),
        }
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        self.take(key)?
            .ok_or_else(|| CliError::Config(format!("{}: missing `{key}`", self.generator)))
    }

    fn finish(self) -> Result<(), CliError> {
        match self.values.keys().next() {
            Some(k) => Err(CliError::Config(format!("{}: unknown key `{k}`", self.generator))),
            None => Ok(()),
        }
    }
}

fn need_seed(generator: &str, seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Config(format!("{generator} needs --seed")))
}

/// Build the space described by `spec`.
pub fn generate(spec: &str, seed: Option<u64>) -> Result<FiniteMetricSpace, CliError> {
    let mut p = Params::parse(spec)?;
    let space = match p.generator.as_str() {
        "interval" => {
            let length = p.take("length")?.unwrap_or(1.0);
            let n = p.required("n")?;
            spaces::interval_grid(length, n)?
        }
        "cantor" => spaces::cantor_endpoints(p.required("level")?)?,
        "circle" => {
            let radius = p.take("radius")?.unwrap_or(1.0);
            let n = p.required("n")?;
            let metric = match p.take::<String>("metric")?.as_deref() {
                None | Some("geodesic") => CircleMetric::Geodesic,
                Some("chordal") => CircleMetric::Chordal,
                Some(other) => {
                    return Err(CliError::Config(format!("circle: unknown metric `{other}`")))
                }
            };
            spaces::circle_uniform(radius, n, metric)?.into_base()
        }
        "sierpinski" => spaces::sierpinski_points(p.required("level")?)?,
        "grid2d" => {
            let side = p.take("side")?.unwrap_or(1.0);
            spaces::grid2d(side, p.required("n")?)?
        }
        "random" => {
            let n = p.required("n")?;
            let dim = p.take("dim")?.unwrap_or(2);
            spaces::random_cloud(n, dim, need_seed("random", seed)?)?
        }
        "tree" => {
            let depth: usize = p.required("depth")?;
            let branching = p.required("branching")?;
            let levels: String = p.required("levels")?;
            let levels = levels
                .split('/')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Config(format!("tree: cannot parse levels `{levels}`")))?;
            let random = p.take("random")?.unwrap_or(false);
            let tree_seed = if random {
                Some(need_seed("tree:random=true", seed)?)
            } else {
                None
            };
            ultra::ultrametric_tree(depth, branching, &levels, tree_seed)
                .map_err(|e| CliError::Config(format!("tree: {e}")))?
                .base()
                .clone()
        }
        other => return Err(CliError::Config(format!("unknown generator `{other}`"))),
    };
    p.finish()?;
    Ok(space)
}
