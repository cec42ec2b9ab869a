//! Bundled IEEE test cases, the disturbance scenarios run against them, and
//! two small hand-checkable networks.

use crate::caseio::parse_matpower_case;
use crate::netmodel::{
    apply_disturbance, set_flat_setpoints, Branch, Bus, BusId, BusKind, Generator, Network,
};

const CASE9: &str = include_str!("../../../data/case9.m");
const CASE14: &str = include_str!("../../../data/case14.m");
const CASE30: &str = include_str!("../../../data/case30.m");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundledCase {
    Ieee9,
    Ieee14,
    Ieee30,
}

impl BundledCase {
    pub const ALL: [BundledCase; 3] = [BundledCase::Ieee9, BundledCase::Ieee14, BundledCase::Ieee30];

    pub fn name(self) -> &'static str {
        match self {
            BundledCase::Ieee9 => "case9",
            BundledCase::Ieee14 => "case14",
            BundledCase::Ieee30 => "case30",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let stem = name.strip_suffix(".m").unwrap_or(name);
        Self::ALL.into_iter().find(|c| c.name() == stem)
    }

    pub fn text(self) -> &'static str {
        match self {
            BundledCase::Ieee9 => CASE9,
            BundledCase::Ieee14 => CASE14,
            BundledCase::Ieee30 => CASE30,
        }
    }

    pub fn network(self) -> Network {
        parse_matpower_case(self.text()).expect("bundled case parses")
    }
}

/// A bundled case with reactive disturbances applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub case: BundledCase,
    /// `(bus, MVAr)`, positive inductive.
    pub disturbances: Vec<(BusId, f64)>,
    pub flat_setpoints: Option<f64>,
}

impl Scenario {
    pub fn network(&self) -> Network {
        let mut net = self.case.network();
        if let Some(v) = self.flat_setpoints {
            net = set_flat_setpoints(&net, v).expect("scenario set-point in range");
        }
        for &(bus, dq) in &self.disturbances {
            net = apply_disturbance(&net, bus, dq).expect("scenario bus exists");
        }
        net
    }

    /// 70 MVAr inductive at bus 9, all set-points at 1.0 pu.
    pub fn ieee9() -> Self {
        Self {
            name: "ieee9",
            case: BundledCase::Ieee9,
            disturbances: vec![(9, 70.0)],
            flat_setpoints: Some(1.0),
        }
    }

    /// 46.4 MVAr capacitive at bus 10 on the stock set-points
    /// (bus 10 starts from its stock 1.051 pu).
    pub fn ieee14() -> Self {
        Self {
            name: "ieee14",
            case: BundledCase::Ieee14,
            disturbances: vec![(10, -46.4)],
            flat_setpoints: None,
        }
    }

    /// Opposing disturbances at buses 7 (capacitive) and 14 (inductive)
    /// with flat set-points; controlling either bus pushes the other out.
    pub fn ieee14_conflict() -> Self {
        Self {
            name: "ieee14-conflict",
            case: BundledCase::Ieee14,
            disturbances: vec![(7, -150.0), (14, 70.0)],
            flat_setpoints: Some(1.0),
        }
    }

    /// 90 MVAr inductive at bus 8 and 100 MVAr capacitive at bus 25.
    pub fn ieee30() -> Self {
        Self {
            name: "ieee30",
            case: BundledCase::Ieee30,
            disturbances: vec![(8, 90.0), (25, -100.0)],
            flat_setpoints: Some(1.0),
        }
    }

    pub fn all() -> Vec<Self> {
        vec![
            Self::ieee9(),
            Self::ieee14(),
            Self::ieee30(),
            Self::ieee14_conflict(),
        ]
    }
}

fn generator(bus: BusId) -> Generator {
    Generator {
        bus,
        p_gen: 0.0,
        v_setpoint: 1.0,
        in_service: true,
    }
}

/// Slack bus 1 feeding load bus 2 through a lossless `x = 0.1` pu line on a
/// 100 MVA base.
pub fn two_bus(q_load_mvar: f64) -> Network {
    let mut load = Bus::new(2, BusKind::Pq);
    load.q_load = q_load_mvar;
    Network {
        base_mva: 100.0,
        buses: vec![Bus::new(1, BusKind::Slack), load],
        branches: vec![Branch::line(1, 2, 0.0, 0.1, 0.0)],
        generators: vec![generator(1)],
    }
}

/// Lossless triangle: slack 1, PV 2, PQ 3, with line susceptances
/// `b12 = 10`, `b23 = 5`, `b13 = 4` pu.
pub fn three_bus() -> Network {
    Network {
        base_mva: 100.0,
        buses: vec![
            Bus::new(1, BusKind::Slack),
            Bus::new(2, BusKind::Pv),
            Bus::new(3, BusKind::Pq),
        ],
        branches: vec![
            Branch::line(1, 2, 0.0, 0.1, 0.0),
            Branch::line(2, 3, 0.0, 0.2, 0.0),
            Branch::line(1, 3, 0.0, 0.25, 0.0),
        ],
        generators: vec![generator(1), generator(2)],
    }
}
