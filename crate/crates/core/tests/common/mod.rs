#![allow(dead_code)]

use std::path::PathBuf;

use gridstrength::network::SystemCase;
use gridstrength::simulator::PowerSystem;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn case(name: &str) -> SystemCase {
    SystemCase::from_file(fixture(name)).unwrap()
}

pub fn system(name: &str) -> PowerSystem {
    PowerSystem::from_case(&case(name)).unwrap()
}

pub fn bus(sys: &PowerSystem, id: u32) -> usize {
    sys.case.bus_index(id).unwrap()
}
