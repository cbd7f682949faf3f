//! Protocol parameter sets for the WiFi (802.11n) and NR-U contenders.
//!
//! All durations are seconds, frame sizes are bits, rates are bits/s. Unit
//! conversions (dBm, ms, bytes) belong to the configuration layer, not here.

use thiserror::Error;

/// Validation failure for a protocol parameter set.
#[derive(Debug, Error)]
pub enum ParamError {
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be at least 1 (got {value})")]
    BelowOne { field: &'static str, value: f64 },
    #[error("unknown LBT priority class {0} (expected 1..=4)")]
    UnknownClass(u8),
    #[error("MCOT {mcot_s} s is not admissible for LBT priority class {class}")]
    McotClassMismatch { class: u8, mcot_s: f64 },
}

/// 802.11 DCF parameters for one WiFi system (all stations identical).
#[derive(Debug, Clone, PartialEq)]
pub struct WifiParams {
    /// Initial contention window size (counter drawn uniformly from `0..cw_min`).
    pub cw_min: u32,
    /// Maximum backoff stage; the window at stage `i` is `2^i * cw_min`.
    pub max_backoff_stage: u32,
    /// CCA slot duration in seconds (shared with the gNB).
    pub slot_time: f64,
    /// Short inter-frame spacing (s).
    pub sifs: f64,
    /// Distributed inter-frame spacing (s).
    pub difs: f64,
    /// PCF inter-frame spacing (s). Stored for completeness; not used by any
    /// implemented expression.
    pub pifs: f64,
    /// RTS frame size (bits).
    pub rts_bits: f64,
    /// CTS frame size (bits).
    pub cts_bits: f64,
    /// MAC+PHY header size (bits).
    pub header_bits: f64,
    /// ACK frame size (bits).
    pub ack_bits: f64,
    /// PHY rate of the WiFi system (bits/s).
    pub phy_rate: f64,
    /// Propagation delay (s).
    pub prop_delay: f64,
    /// Mean frame payload (bits).
    pub payload_mean_bits: f64,
}

impl WifiParams {
    /// 802.11n parameter set used throughout the experiments
    /// (20 MHz, 54 Mbit/s, RTS/CTS handshake, 1500-byte mean payload).
    pub fn default_11n() -> Self {
        WifiParams {
            cw_min: 16,
            max_backoff_stage: 6,
            slot_time: 9e-6,
            sifs: 16e-6,
            difs: 34e-6,
            pifs: 25e-6,
            rts_bits: 288.0,
            cts_bits: 352.0,
            header_bits: 400.0,
            ack_bits: 364.0,
            phy_rate: 54e6,
            prop_delay: 0.1e-6,
            payload_mean_bits: 1500.0 * 8.0,
        }
    }

    /// Same parameter set with a different mean payload, in bytes.
    pub fn with_payload_bytes(mut self, bytes: f64) -> Self {
        self.payload_mean_bits = bytes * 8.0;
        self
    }

    /// Per-exchange overhead duration: handshake and control frames plus all
    /// inter-frame gaps, excluding the payload itself.
    pub fn overhead_duration(&self) -> f64 {
        (self.rts_bits + self.cts_bits + self.header_bits + self.ack_bits) / self.phy_rate
            + 3.0 * self.sifs
            + self.difs
            + 4.0 * self.prop_delay
    }

    /// Duration of a successful RTS/CTS exchange carrying `payload_bits`.
    pub fn success_duration_for_payload(&self, payload_bits: f64) -> f64 {
        self.overhead_duration() + payload_bits / self.phy_rate
    }

    /// Duration of a successful exchange at the configured mean payload.
    pub fn success_duration(&self) -> f64 {
        self.success_duration_for_payload(self.payload_mean_bits)
    }

    /// Duration wasted by a WiFi-only collision (RTS collision).
    pub fn collision_duration(&self) -> f64 {
        self.rts_bits / self.phy_rate + self.difs + self.prop_delay
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.cw_min < 1 {
            return Err(ParamError::BelowOne { field: "cw_min", value: self.cw_min as f64 });
        }
        if self.max_backoff_stage < 1 {
            return Err(ParamError::BelowOne {
                field: "max_backoff_stage",
                value: self.max_backoff_stage as f64,
            });
        }
        for (field, value) in [
            ("slot_time", self.slot_time),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("pifs", self.pifs),
            ("phy_rate", self.phy_rate),
            ("payload_mean_bits", self.payload_mean_bits),
        ] {
            if value <= 0.0 {
                return Err(ParamError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

/// One row of the LBT priority-class table.
#[derive(Debug, Clone, Copy)]
pub struct LbtClass {
    pub class: u8,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Defer slots in the clear-channel-assessment period.
    pub defer_slots: u32,
    /// Admissible MCOT values (s).
    pub mcot_values: &'static [f64],
    /// Admissible initial window sizes.
    pub windows: &'static [u32],
}

const LBT_CLASSES: [LbtClass; 4] = [
    LbtClass { class: 1, cw_min: 3, cw_max: 7, defer_slots: 1, mcot_values: &[2e-3], windows: &[3, 7] },
    LbtClass { class: 2, cw_min: 7, cw_max: 15, defer_slots: 1, mcot_values: &[3e-3], windows: &[7, 15] },
    LbtClass {
        class: 3,
        cw_min: 15,
        cw_max: 63,
        defer_slots: 3,
        mcot_values: &[8e-3, 10e-3],
        windows: &[15, 31, 63],
    },
    LbtClass {
        class: 4,
        cw_min: 15,
        cw_max: 1023,
        defer_slots: 7,
        mcot_values: &[8e-3, 10e-3],
        windows: &[15, 31, 63, 127, 255, 511, 1023],
    },
];

/// Look up one LBT priority class (1..=4).
pub fn lbt_class(class: u8) -> Result<&'static LbtClass, ParamError> {
    LBT_CLASSES
        .iter()
        .find(|c| c.class == class)
        .ok_or(ParamError::UnknownClass(class))
}

/// Cat-4 LBT parameters of the gNB contender on one unlicensed channel.
///
/// The window is kept real-valued because the proportional-fairness tuner
/// treats it as a continuous variable; integer use sites round it.
#[derive(Debug, Clone, PartialEq)]
pub struct NruParams {
    /// Initial contention window size for the ECCA backoff.
    pub cw_min: f64,
    /// Maximum backoff stage; stage `i` uses window `2^i * cw_min` and the
    /// packet is dropped after a collision at the last stage.
    pub max_backoff_stage: u32,
    /// Number of CCA slots in the initial defer period,
    /// `floor((silent_period + defer_slots * slot_time) / slot_time)`.
    pub icca_slots: u32,
    /// Silent period at the head of the defer duration (s).
    pub silent_period: f64,
    /// Priority-class defer slot count.
    pub defer_slots: u32,
    /// Maximum channel occupancy time after winning the channel (s).
    pub mcot: f64,
    /// NR slot duration; transmission starts at the next slot boundary, so a
    /// won channel is occupied for `mcot + gnb_slot` (s).
    pub gnb_slot: f64,
    /// LBT priority class (1..=4).
    pub priority_class: u8,
}

impl NruParams {
    /// Class-4 LBT with the defaults used in the experiments
    /// (16 us silent period, 9 us CCA slot, 0.25 ms NR slot, 8 ms MCOT,
    /// initial window 16).
    pub fn default_cat4() -> Self {
        Self::from_class(4, 16.0, 8e-3, 16e-6, 9e-6, 0.25e-3)
            .expect("default class-4 parameters are admissible")
    }

    /// Build from a priority class, computing the defer-slot count from the
    /// silent period and the CCA slot duration.
    pub fn from_class(
        class: u8,
        cw_min: f64,
        mcot: f64,
        silent_period: f64,
        slot_time: f64,
        gnb_slot: f64,
    ) -> Result<Self, ParamError> {
        let row = lbt_class(class)?;
        if !row.mcot_values.iter().any(|&m| (m - mcot).abs() < 1e-9) {
            return Err(ParamError::McotClassMismatch { class, mcot_s: mcot });
        }
        let defer = silent_period + row.defer_slots as f64 * slot_time;
        let icca_slots = (defer / slot_time).floor() as u32;
        // Doublings available between the class's window bounds:
        // (cw_max+1)/(cw_min+1) = 2^m.
        let stages = (((row.cw_max + 1) / (row.cw_min + 1)) as f64).log2().round() as u32;
        let params = NruParams {
            cw_min,
            max_backoff_stage: stages.max(1),
            icca_slots,
            silent_period,
            defer_slots: row.defer_slots,
            mcot,
            gnb_slot,
            priority_class: class,
        };
        params.validate()?;
        Ok(params)
    }

    /// Same parameters with a different MCOT (must stay class-admissible).
    pub fn with_mcot(mut self, mcot: f64) -> Result<Self, ParamError> {
        let row = lbt_class(self.priority_class)?;
        if !row.mcot_values.iter().any(|&m| (m - mcot).abs() < 1e-9) {
            return Err(ParamError::McotClassMismatch { class: self.priority_class, mcot_s: mcot });
        }
        self.mcot = mcot;
        Ok(self)
    }

    /// Same parameters with a different initial window.
    pub fn with_window(mut self, cw_min: f64) -> Self {
        self.cw_min = cw_min;
        self
    }

    /// Channel time consumed by a gNB transmission, successful or not.
    pub fn occupancy_duration(&self) -> f64 {
        self.mcot + self.gnb_slot
    }

    /// Whether a window size belongs to the class's admissible set.
    pub fn window_in_class(&self, window: f64) -> bool {
        match lbt_class(self.priority_class) {
            Ok(row) => row.windows.iter().any(|&w| (w as f64 - window).abs() < 0.5),
            Err(_) => false,
        }
    }

    /// Admissible window size closest to `window`.
    pub fn nearest_class_window(&self, window: f64) -> u32 {
        let row = lbt_class(self.priority_class).expect("validated class");
        *row.windows
            .iter()
            .min_by(|a, b| {
                let da = (**a as f64 - window).abs();
                let db = (**b as f64 - window).abs();
                da.partial_cmp(&db).unwrap()
            })
            .expect("class window table is non-empty")
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.cw_min < 1.0 {
            return Err(ParamError::BelowOne { field: "cw_min", value: self.cw_min });
        }
        if self.max_backoff_stage < 1 {
            return Err(ParamError::BelowOne {
                field: "max_backoff_stage",
                value: self.max_backoff_stage as f64,
            });
        }
        if self.icca_slots < 1 {
            return Err(ParamError::BelowOne { field: "icca_slots", value: self.icca_slots as f64 });
        }
        for (field, value) in [("mcot", self.mcot), ("gnb_slot", self.gnb_slot)] {
            if value <= 0.0 {
                return Err(ParamError::NonPositive { field, value });
            }
        }
        lbt_class(self.priority_class)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_wifi_durations_match_hand_arithmetic() {
        let w = WifiParams::default_11n();
        // (288+352+400+12000+364)/54e6 + 3*16e-6 + 34e-6 + 4*0.1e-6
        let expect = 13404.0 / 54e6 + 48e-6 + 34e-6 + 0.4e-6;
        assert!((w.success_duration() - expect).abs() < 1e-15);
        assert!((w.success_duration() - 330.6222e-6).abs() < 1e-9);
        let expect_c = 288.0 / 54e6 + 34e-6 + 0.1e-6;
        assert!((w.collision_duration() - expect_c).abs() < 1e-15);
    }

    #[test]
    fn class4_defer_gives_eight_icca_slots() {
        let n = NruParams::default_cat4();
        assert_eq!(n.icca_slots, 8);
        assert_eq!(n.defer_slots, 7);
        assert!((n.occupancy_duration() - 8.25e-3).abs() < 1e-12);
    }

    #[test]
    fn mcot_must_match_class() {
        assert!(NruParams::from_class(4, 16.0, 5e-3, 16e-6, 9e-6, 0.25e-3).is_err());
        assert!(NruParams::from_class(1, 4.0, 2e-3, 16e-6, 9e-6, 0.25e-3).is_ok());
        assert!(NruParams::default_cat4().with_mcot(10e-3).is_ok());
    }

    #[test]
    fn nearest_class_window_picks_closest() {
        let n = NruParams::default_cat4();
        assert_eq!(n.nearest_class_window(235.0), 255);
        assert_eq!(n.nearest_class_window(20.0), 15);
        assert!(n.window_in_class(511.0));
        assert!(!n.window_in_class(235.0));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut w = WifiParams::default_11n();
        w.phy_rate = 0.0;
        assert!(w.validate().is_err());
        let mut n = NruParams::default_cat4();
        n.cw_min = 0.5;
        assert!(n.validate().is_err());
    }
}
