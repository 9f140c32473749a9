//! Default parameter values per node kind.

use super::{Medium, NodeKind, NodeParams};

/// Share of a shared network device's idle power charged to vehicular-cloud
/// traffic: M2M share of global traffic times the connected-car/city share of M2M.
pub const ATTRIBUTED_IDLE_SHARE: f64 = 0.07 * 0.13;

/// Power amplifier factor, J/(bit·m²) (100 pJ/bit/m²).
pub const AMP_FACTOR: f64 = 100e-12;

pub const DSRC_RATE_BPS: f64 = 27e6;
pub const WIFI_RATE_BPS: f64 = 150e6;

/// Processing demand attached to each Mb/s of traffic when only traffic is given.
pub const MIPS_PER_MBPS: f64 = 2000.0;

pub fn defaults(kind: NodeKind) -> NodeParams {
    match kind {
        NodeKind::Vehicle => NodeParams {
            proc_capacity: 3200.0,
            proc_max: 7.9,
            proc_idle: 3.95,
            net_max: 2.712,
            net_idle: 1.05007,
            net_idle_charged: 1.05007,
            node_rate: Some(DSRC_RATE_BPS),
            wifi_rate: Some(WIFI_RATE_BPS),
            onu_rate: None,
            onu_max: None,
            onu_idle: None,
            dsrc_tx_w: Some(0.158),
            dsrc_rx_dbm: Some(-77.0),
            wifi_tx_w: Some(0.025),
            wifi_rx_dbm: Some(-72.0),
            amp_factor: AMP_FACTOR,
            pue: 1.0,
        },
        NodeKind::EdgeNode => NodeParams {
            proc_capacity: 9600.0,
            proc_max: 12.5,
            proc_idle: 2.0,
            net_max: 25.0,
            net_idle: 5.5,
            net_idle_charged: 5.5,
            node_rate: Some(WIFI_RATE_BPS),
            wifi_rate: None,
            onu_rate: Some(10e9),
            onu_max: Some(15.0),
            onu_idle: Some(13.5),
            dsrc_tx_w: None,
            dsrc_rx_dbm: None,
            wifi_tx_w: Some(0.63),
            wifi_rx_dbm: Some(-104.0),
            amp_factor: AMP_FACTOR,
            pue: 1.0,
        },
        NodeKind::CloudServer => NodeParams {
            proc_capacity: 112_000.0,
            proc_max: 115.0,
            proc_idle: 57.0,
            net_max: 0.0,
            net_idle: 0.0,
            net_idle_charged: 0.0,
            node_rate: None,
            wifi_rate: None,
            onu_rate: None,
            onu_max: None,
            onu_idle: None,
            dsrc_tx_w: None,
            dsrc_rx_dbm: None,
            wifi_tx_w: None,
            wifi_rx_dbm: None,
            amp_factor: 0.0,
            pue: 1.1,
        },
        wired => {
            let (net_max, net_idle, rate) = match wired {
                NodeKind::Olt => (1940.0, 60.0, 8600e9),
                NodeKind::AggSwitch => (210.0, 189.0, 240e9),
                NodeKind::AggRouter => (5.25, 4.725, 10e9),
                NodeKind::CoreRouter => (30.0, 27.0, 40e9),
                NodeKind::CloudRouter => (30.0, 27.0, 40e9),
                NodeKind::CloudSwitch => (470.0, 423.0, 600e9),
                _ => unreachable!(),
            };
            NodeParams {
                proc_capacity: 0.0,
                proc_max: 0.0,
                proc_idle: 0.0,
                net_max,
                net_idle,
                net_idle_charged: net_idle * ATTRIBUTED_IDLE_SHARE,
                node_rate: Some(rate),
                wifi_rate: None,
                onu_rate: None,
                onu_max: None,
                onu_idle: None,
                dsrc_tx_w: None,
                dsrc_rx_dbm: None,
                wifi_tx_w: None,
                wifi_rx_dbm: None,
                amp_factor: 0.0,
                pue: 1.5,
            }
        }
    }
}

/// Rate of a link between two nodes with the given parameters. Wireless links use
/// the radio rate; fibre links the smaller of the endpoint rates.
pub fn link_rate(medium: Medium, a: &NodeParams, b: &NodeParams) -> f64 {
    match medium {
        Medium::Dsrc => DSRC_RATE_BPS,
        Medium::Wifi => WIFI_RATE_BPS,
        Medium::Fiber => {
            let rate = |p: &NodeParams| p.onu_rate.or(p.node_rate).unwrap_or(f64::INFINITY);
            rate(a).min(rate(b))
        }
    }
}

/// The wired chain from the OLT to the cloud server, in order.
pub const WIRED_CHAIN: [(NodeKind, &str); 7] = [
    (NodeKind::Olt, "olt"),
    (NodeKind::AggSwitch, "agg_switch"),
    (NodeKind::AggRouter, "agg_router"),
    (NodeKind::CoreRouter, "core_router"),
    (NodeKind::CloudRouter, "cloud_router"),
    (NodeKind::CloudSwitch, "cloud_switch"),
    (NodeKind::CloudServer, "cloud"),
];
