//! Device configurations matching the three workload static partitions.
//!
//! The column maps are modeled, not taken from a die: only the
//! uncommitted-region totals are authoritative. Each static partition is an
//! L-shape (a block of full-height columns plus a one-row foot).

use crate::fabric::{build_device, Device, DeviceConfig};
use crate::workloads::WorkloadFamily;

const BRAM_JSON: &str = include_str!("../configs/workload_bram.json");
const DSP_JSON: &str = include_str!("../configs/workload_dsp.json");
const MIXED_JSON: &str = include_str!("../configs/workload_mixed.json");

pub fn config_json(family: WorkloadFamily) -> &'static str {
    match family {
        WorkloadFamily::Bram => BRAM_JSON,
        WorkloadFamily::Dsp => DSP_JSON,
        WorkloadFamily::Mixed => MIXED_JSON,
    }
}

pub fn config(family: WorkloadFamily) -> DeviceConfig {
    DeviceConfig::from_json(config_json(family)).expect("bundled config parses")
}

pub fn device(family: WorkloadFamily) -> Device {
    build_device(&config(family)).expect("bundled config is valid")
}

pub fn workload_bram() -> Device {
    device(WorkloadFamily::Bram)
}

pub fn workload_dsp() -> Device {
    device(WorkloadFamily::Dsp)
}

pub fn workload_mixed() -> Device {
    device(WorkloadFamily::Mixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::place_interfaces_peripheral;
    use crate::footprint::ResourceVector;

    #[test]
    fn uncommitted_totals() {
        let want = [
            (WorkloadFamily::Bram, ResourceVector::new(27_816, 80, 90)),
            (WorkloadFamily::Dsp, ResourceVector::new(23_968, 38, 120)),
            (WorkloadFamily::Mixed, ResourceVector::new(22_712, 40, 80)),
        ];
        for (family, budget) in want {
            let d = device(family);
            assert_eq!(d.budget(), budget, "{family}");
            assert_eq!(d.region_capacity(d.region()).unwrap(), budget, "{family}");
        }
    }

    #[test]
    fn anchors_are_peripheral_placement() {
        for family in WorkloadFamily::ALL {
            let d = device(family);
            let placed = place_interfaces_peripheral(&d, 6, family.interface_kind()).unwrap();
            assert_eq!(d.interfaces(), placed.as_slice(), "{family}");
        }
    }

    #[test]
    fn config_round_trips() {
        for family in WorkloadFamily::ALL {
            let d = device(family);
            assert_eq!(build_device(&d.to_config()).unwrap(), d);
        }
    }
}
