//! Bundled five-channel benchmark with rectangular obstacle groups.

use crate::env::Environment;
use crate::geometry::Point;
use crate::search::PathQuery;

pub const BENCHMARK_JSON: &str = include_str!("../data/benchmark.json");

pub const BENCHMARK_START: Point = Point { x: 2.0, y: 2.0 };
pub const BENCHMARK_GOAL: Point = Point { x: 118.0, y: 58.0 };

pub fn benchmark_environment() -> Environment {
    Environment::from_json(BENCHMARK_JSON).expect("bundled benchmark is valid")
}

pub fn benchmark_query() -> PathQuery {
    PathQuery::new(BENCHMARK_START, BENCHMARK_GOAL)
}
