//! Analytical latency and area model for a weight-stationary spatial DNN
//! accelerator.
//!
//! The accelerator is a `pe_width x pe_height` grid of MACs: output channels
//! map across columns, input channels across rows. Each layer is tiled with
//! divisor-only factors `(t_K, t_C, t_H, t_W)`, constrained by double-
//! buffered global-buffer capacity and per-PE register-file capacity, and
//! scheduled under one of three loop orders that trade weight, input, and
//! partial-sum DRAM traffic. Compute and DRAM transfers overlap; a tile
//! stalls only when its traffic exceeds its compute time. The reported
//! mapping minimizes total cycles with a deterministic lexicographic
//! tie-break.

pub mod workloads;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes per output partial sum held in the PE register file.
pub const ACCUMULATOR_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Fc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub kind: LayerKind,
    /// Input channels.
    pub c: u64,
    /// Output channels.
    pub k: u64,
    /// Output spatial height and width.
    pub h: u64,
    pub w: u64,
    /// Kernel height and width.
    pub r: u64,
    pub s: u64,
    pub stride: u64,
    pub bytes_per_element: u64,
}

impl LayerShape {
    pub fn conv(name: &str, c: u64, k: u64, hw: u64, rs: u64, stride: u64) -> Self {
        LayerShape {
            name: name.to_string(),
            kind: LayerKind::Conv,
            c,
            k,
            h: hw,
            w: hw,
            r: rs,
            s: rs,
            stride,
            bytes_per_element: 1,
        }
    }

    pub fn fc(name: &str, c: u64, k: u64) -> Self {
        LayerShape {
            name: name.to_string(),
            kind: LayerKind::Fc,
            c,
            k,
            h: 1,
            w: 1,
            r: 1,
            s: 1,
            stride: 1,
            bytes_per_element: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.c, self.k, self.h, self.w, self.r, self.s, self.stride];
        if dims.contains(&0) || self.bytes_per_element == 0 {
            return Err(Error::InvalidArgument(format!(
                "layer {:?} has a zero dimension",
                self.name
            )));
        }
        if self.kind == LayerKind::Fc
            && (self.h != 1 || self.w != 1 || self.r != 1 || self.s != 1 || self.stride != 1)
        {
            return Err(Error::InvalidArgument(format!(
                "fc layer {:?} must have h=w=r=s=stride=1",
                self.name
            )));
        }
        Ok(())
    }

    /// Multiply-accumulate operations in this layer.
    pub fn macs(&self) -> u64 {
        self.k * self.c * self.h * self.w * self.r * self.s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceleratorConfig {
    pub pe_width: u32,
    pub pe_height: u32,
    pub regfile_bytes_per_pe: u64,
    pub global_buffer_bytes: u64,
    pub dram_bw_bytes_per_cycle: u64,
    pub clock_hz: f64,
}

impl AcceleratorConfig {
    pub fn pes(&self) -> u64 {
        self.pe_width as u64 * self.pe_height as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.pe_width == 0 || self.pe_height == 0 {
            return Err(Error::InvalidArgument("PE grid dimensions must be >= 1".into()));
        }
        if self.regfile_bytes_per_pe == 0 || self.global_buffer_bytes == 0 {
            return Err(Error::InvalidArgument("on-chip memories must be >= 1 byte".into()));
        }
        if self.dram_bw_bytes_per_cycle == 0 {
            return Err(Error::InvalidArgument("DRAM bandwidth must be >= 1 byte/cycle".into()));
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::InvalidArgument("clock must be a positive frequency".into()));
        }
        Ok(())
    }
}

/// Tile-loop orders. The tuple behind each tag is the DRAM-traffic
/// multiplier model: how many times weights and inputs are re-fetched and
/// how many read-modify-write passes partial sums make.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopOrder {
    /// Weights resident: each weight tile loads once; inputs reload per
    /// output-channel tile; partial sums pass per input-channel tile.
    WeightOuter,
    /// Outputs resident: partial sums write exactly once; weights reload
    /// per spatial tile; inputs reload per output-channel tile.
    OutputOuter,
    /// Inputs resident: each input tile loads once; weights reload per
    /// spatial tile; partial sums pass per input-channel tile.
    InputOuter,
}

pub const LOOP_ORDERS: [LoopOrder; 3] = [
    LoopOrder::WeightOuter,
    LoopOrder::OutputOuter,
    LoopOrder::InputOuter,
];

impl LoopOrder {
    pub fn index(self) -> usize {
        match self {
            LoopOrder::WeightOuter => 0,
            LoopOrder::OutputOuter => 1,
            LoopOrder::InputOuter => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LoopOrder::WeightOuter => "weight-outer",
            LoopOrder::OutputOuter => "output-outer",
            LoopOrder::InputOuter => "input-outer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub t_k: u64,
    pub t_c: u64,
    pub t_h: u64,
    pub t_w: u64,
    pub order: LoopOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfResult {
    pub cycles: u64,
    pub latency_s: f64,
    pub fps: f64,
    /// Achieved MACs per PE-cycle, in [0, 1].
    pub utilization: f64,
    pub macs: u64,
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Finds the cycle-optimal tiling and loop order for one layer. Tile factor
/// `t_X` splits dimension `X` into `t_X` sequential tiles; factors must
/// divide the dimension exactly. Returns the mapping and its cycle count,
/// or `InfeasibleMapping` when no tiling fits the memories.
pub fn map_layer(layer: &LayerShape, cfg: &AcceleratorConfig) -> Result<(Mapping, u64)> {
    layer.validate()?;
    cfg.validate()?;
    let (k, c, h, w) = (layer.k, layer.c, layer.h, layer.w);
    let (r, s, stride, bpe) = (layer.r, layer.s, layer.stride, layer.bytes_per_element);
    let pw = cfg.pe_width as u64;
    let ph = cfg.pe_height as u64;
    let bw = cfg.dram_bw_bytes_per_cycle;

    let w_all = k * c * r * s * bpe;
    let o_all = k * h * w * bpe;

    let mut best: Option<(u64, Mapping)> = None;
    for &t_k in &divisors(k) {
        let k_t = k / t_k;
        for &t_c in &divisors(c) {
            let c_t = c / t_c;
            let w_tile = k_t * c_t * r * s * bpe;
            for &t_h in &divisors(h) {
                let h_t = h / t_h;
                let h_in = (h_t - 1) * stride + r;
                for &t_w in &divisors(w) {
                    let w_t = w / t_w;
                    let w_in = (w_t - 1) * stride + s;
                    let i_tile = c_t * h_in * w_in * bpe;
                    let o_tile = k_t * h_t * w_t * bpe;
                    // Double buffering: current and next tile coexist.
                    if 2 * (w_tile + i_tile + o_tile) > cfg.global_buffer_bytes {
                        continue;
                    }
                    // Each PE holds one filter row, one input row, and one
                    // output row of partial sums.
                    let rf_need = r * s * bpe + w_in * bpe + w_t * ACCUMULATOR_BYTES;
                    if rf_need > cfg.regfile_bytes_per_pe {
                        continue;
                    }
                    let per_tile_compute =
                        k_t.div_ceil(pw) * c_t.div_ceil(ph) * h_t * w_t * r * s;
                    let n_tiles = t_k * t_c * t_h * t_w;
                    let compute = per_tile_compute * n_tiles;
                    let i_all = t_c * t_h * t_w * i_tile;
                    for order in LOOP_ORDERS {
                        let (w_loads, i_loads, o_passes) = match order {
                            LoopOrder::WeightOuter => (1, t_k, t_c),
                            LoopOrder::OutputOuter => (t_h * t_w, t_k, 1),
                            LoopOrder::InputOuter => (t_h * t_w, 1, t_c),
                        };
                        // Partial sums stream out once and back in for every
                        // extra accumulation pass.
                        let traffic =
                            w_loads * w_all + i_loads * i_all + (2 * o_passes - 1) * o_all;
                        let per_tile_traffic_cycles = traffic.div_ceil(n_tiles * bw);
                        let stall =
                            n_tiles * per_tile_traffic_cycles.saturating_sub(per_tile_compute);
                        let cycles = compute + stall;
                        let mapping = Mapping { t_k, t_c, t_h, t_w, order };
                        let key = (cycles, t_k, t_c, t_h, t_w, order.index());
                        let better = match &best {
                            None => true,
                            Some((bc, bm)) => {
                                key < (*bc, bm.t_k, bm.t_c, bm.t_h, bm.t_w, bm.order.index())
                            }
                        };
                        if better {
                            best = Some((cycles, mapping));
                        }
                    }
                }
            }
        }
    }
    match best {
        Some((cycles, mapping)) => Ok((mapping, cycles)),
        None => Err(Error::InfeasibleMapping(format!(
            "layer {:?} ({}x{}x{}x{}) fits no tiling: regfile {} B, global buffer {} B",
            layer.name, layer.k, layer.c, layer.h, layer.w,
            cfg.regfile_bytes_per_pe, cfg.global_buffer_bytes
        ))),
    }
}

/// Maps every layer and aggregates whole-network performance.
pub fn workload_latency(layers: &[LayerShape], cfg: &AcceleratorConfig) -> Result<PerfResult> {
    if layers.is_empty() {
        return Err(Error::InvalidArgument("workload has no layers".into()));
    }
    let mut cycles: u64 = 0;
    let mut macs: u64 = 0;
    for layer in layers {
        let (_, layer_cycles) = map_layer(layer, cfg)?;
        cycles += layer_cycles;
        macs += layer.macs();
    }
    let latency_s = cycles as f64 / cfg.clock_hz;
    let fps = cfg.clock_hz / cycles as f64;
    let utilization = macs as f64 / (cycles as f64 * cfg.pes() as f64);
    Ok(PerfResult { cycles, latency_s, fps, utilization, macs })
}

/// Area coefficients for one technology node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaParams {
    /// mm^2 per gate-equivalent of random logic.
    pub ge_mm2: f64,
    /// mm^2 per byte of on-chip SRAM.
    pub sram_mm2_per_byte: f64,
    /// Gate-equivalents of the non-multiplier PE datapath (accumulator,
    /// control); independent of the multiplier variant.
    pub adder_ge: f64,
    /// Clock, IO, and NoC overhead.
    pub overhead_mm2: f64,
}

impl AreaParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.ge_mm2, self.sram_mm2_per_byte, self.adder_ge, self.overhead_mm2];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) || self.ge_mm2 == 0.0 {
            return Err(Error::Config("area coefficients must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Die area in mm^2 of an accelerator built around `multiplier_area_ge`
/// multipliers. Strictly increasing in the multiplier area, the PE count,
/// and both memory capacities.
pub fn accelerator_area(
    cfg: &AcceleratorConfig,
    multiplier_area_ge: f64,
    params: &AreaParams,
) -> Result<f64> {
    cfg.validate()?;
    params.validate()?;
    if !(multiplier_area_ge.is_finite() && multiplier_area_ge >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "multiplier area must be finite and >= 0, got {multiplier_area_ge}"
        )));
    }
    let pes = cfg.pes() as f64;
    let pe_logic = (multiplier_area_ge + params.adder_ge) * params.ge_mm2;
    let pe_rf = cfg.regfile_bytes_per_pe as f64 * params.sram_mm2_per_byte;
    let gbuf = cfg.global_buffer_bytes as f64 * params.sram_mm2_per_byte;
    Ok(pes * (pe_logic + pe_rf) + gbuf + params.overhead_mm2)
}

/// Power-of-two-friendly grid shapes: all divisor pairs `(width, height)`
/// of `pes` whose aspect ratio stays within `max_ratio`, ascending width.
pub fn aspect_pairs(pes: u64, max_ratio: u64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for &w in &divisors(pes) {
        let h = pes / w;
        if w.max(h) <= w.min(h) * max_ratio && w <= u32::MAX as u64 && h <= u32::MAX as u64 {
            out.push((w as u32, h as u32));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::workloads::builtin_workload;

    pub(crate) fn preset_cfg(pw: u32, ph: u32) -> AcceleratorConfig {
        AcceleratorConfig {
            pe_width: pw,
            pe_height: ph,
            regfile_bytes_per_pe: 128,
            global_buffer_bytes: 1024 * (pw as u64 * ph as u64),
            dram_bw_bytes_per_cycle: 64,
            clock_hz: 1.0e9,
        }
    }

    #[test]
    fn divisor_enumeration() {
        assert_eq!(divisors(1), vec![1]);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(28), vec![1, 2, 4, 7, 14, 28]);
        assert_eq!(divisors(64).len(), 7);
    }

    #[test]
    fn aspect_pair_enumeration() {
        assert_eq!(aspect_pairs(512, 4), vec![(16, 32), (32, 16)]);
        assert_eq!(aspect_pairs(1024, 4), vec![(16, 64), (32, 32), (64, 16)]);
        assert_eq!(aspect_pairs(64, 4), vec![(4, 16), (8, 8), (16, 4)]);
        // A prime PE count has no grid within the ratio bound.
        assert!(aspect_pairs(97, 4).is_empty());
    }

    #[test]
    fn vgg16_macs_total() {
        let layers = builtin_workload("vgg16").unwrap();
        let total: u64 = layers.iter().map(|l| l.macs()).sum();
        assert_eq!(total, 15_470_264_320);
    }

    #[test]
    fn conv3_1_mapping_on_1024_pe_grid() {
        // Independently derived with a full enumeration of the tiling space.
        let layer = LayerShape::conv("conv3_1", 128, 256, 56, 3, 1);
        let cfg = preset_cfg(32, 32);
        let (mapping, cycles) = map_layer(&layer, &cfg).unwrap();
        assert_eq!(cycles, 903_168);
        assert_eq!(
            mapping,
            Mapping { t_k: 1, t_c: 1, t_h: 1, t_w: 7, order: LoopOrder::WeightOuter }
        );
    }

    #[test]
    fn fc_layer_is_bandwidth_bound() {
        let layer = LayerShape::fc("fc6", 25088, 4096);
        let cfg = preset_cfg(32, 16);
        let (mapping, cycles) = map_layer(&layer, &cfg).unwrap();
        assert_eq!(cycles, 1_606_144);
        assert_eq!(mapping.order, LoopOrder::OutputOuter);
        assert_eq!((mapping.t_k, mapping.t_c, mapping.t_h, mapping.t_w), (1, 512, 1, 1));
        // Pure compute would be far lower: the fc layer streams 100 MB of
        // weights through 64 B/cycle.
        let min_traffic_cycles = layer.macs() / 64;
        assert!(cycles >= min_traffic_cycles);
    }

    #[test]
    fn conv1_1_small_channel_count_starves_rows() {
        let layer = LayerShape::conv("conv1_1", 3, 64, 224, 3, 1);
        let cfg = preset_cfg(32, 16);
        let (mapping, cycles) = map_layer(&layer, &cfg).unwrap();
        assert_eq!(cycles, 903_168);
        assert_eq!(
            mapping,
            Mapping { t_k: 1, t_c: 1, t_h: 1, t_w: 14, order: LoopOrder::WeightOuter }
        );
    }

    #[test]
    fn vgg16_preset_sweep_cycles_frozen() {
        let layers = builtin_workload("vgg16").unwrap();
        let expect: [(u32, u32, u64); 6] = [
            (16, 4, 242_179_584),
            (16, 8, 122_958_692),
            (32, 8, 62_445_264),
            (32, 16, 32_640_208),
            (64, 16, 17_286_352),
            (64, 32, 9_835_216),
        ];
        for (pw, ph, cycles) in expect {
            let cfg = preset_cfg(pw, ph);
            let perf = workload_latency(&layers, &cfg).unwrap();
            assert_eq!(perf.cycles, cycles, "{pw}x{ph}");
            assert!(perf.utilization > 0.0 && perf.utilization <= 1.0);
            assert!((perf.fps - cfg.clock_hz / cycles as f64).abs() < 1e-9);
            assert!((perf.latency_s * perf.fps - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn utilization_decreases_with_pe_count() {
        let layers = builtin_workload("vgg16").unwrap();
        let grids = [(16, 4), (16, 8), (32, 8), (32, 16), (64, 16), (64, 32)];
        let mut prev = f64::INFINITY;
        for (pw, ph) in grids {
            let util = workload_latency(&layers, &preset_cfg(pw, ph)).unwrap().utilization;
            assert!(util < prev, "{pw}x{ph}: {util} !< {prev}");
            prev = util;
        }
    }

    #[test]
    fn small_global_buffer_adds_stalls() {
        let layers = builtin_workload("vgg16").unwrap();
        let mut cfg = preset_cfg(32, 16);
        cfg.global_buffer_bytes = 64 * 512;
        let perf = workload_latency(&layers, &cfg).unwrap();
        assert_eq!(perf.cycles, 32_649_024);
        assert!(perf.cycles > 32_640_208);
    }

    #[test]
    fn tiny_regfile_is_infeasible() {
        let layers = builtin_workload("vgg16").unwrap();
        let mut cfg = preset_cfg(32, 16);
        cfg.regfile_bytes_per_pe = 8;
        assert!(matches!(
            workload_latency(&layers, &cfg),
            Err(Error::InfeasibleMapping(_))
        ));
    }

    #[test]
    fn mapping_tile_factors_divide_dimensions() {
        let layer = LayerShape::conv("x", 96, 160, 28, 3, 1);
        let cfg = preset_cfg(16, 8);
        let (m, _) = map_layer(&layer, &cfg).unwrap();
        assert_eq!(layer.k % m.t_k, 0);
        assert_eq!(layer.c % m.t_c, 0);
        assert_eq!(layer.h % m.t_h, 0);
        assert_eq!(layer.w % m.t_w, 0);
    }

    #[test]
    fn more_bandwidth_never_hurts() {
        let layer = LayerShape::fc("fc", 4096, 4096);
        let mut prev = u64::MAX;
        for bw in [8, 16, 32, 64, 128] {
            let mut cfg = preset_cfg(32, 16);
            cfg.dram_bw_bytes_per_cycle = bw;
            let (_, cycles) = map_layer(&layer, &cfg).unwrap();
            assert!(cycles <= prev, "bw={bw}");
            prev = cycles;
        }
    }

    #[test]
    fn area_model_components() {
        let cfg = preset_cfg(32, 16);
        let params = AreaParams {
            ge_mm2: 4.0e-8,
            sram_mm2_per_byte: 2.0e-7,
            adder_ge: 400.0,
            overhead_mm2: 0.01,
        };
        let area = accelerator_area(&cfg, 584.0, &params).unwrap();
        assert!((area - 0.14811712).abs() < 1e-12);
        // Strictly monotone in the multiplier area.
        let smaller = accelerator_area(&cfg, 400.0, &params).unwrap();
        assert!(smaller < area);
        assert!(accelerator_area(&cfg, -1.0, &params).is_err());
    }

    #[test]
    fn layer_validation() {
        let mut fc = LayerShape::fc("bad", 10, 10);
        fc.r = 3;
        assert!(fc.validate().is_err());
        let mut conv = LayerShape::conv("bad", 0, 4, 8, 3, 1);
        conv.c = 0;
        assert!(conv.validate().is_err());
        assert!(LayerShape::conv("ok", 3, 4, 8, 3, 1).validate().is_ok());
    }
}
