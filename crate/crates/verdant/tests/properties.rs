//! Randomized invariants over the netlist transforms and the carbon model.

use proptest::prelude::*;

use verdant::approxmul::{
    build_exact_multiplier, error_metrics, precision_scale, prune, Cut, GateAreaTable, Netlist,
};
use verdant::carbon::{cfpa, dies_per_wafer, embodied_carbon, yield_fraction, TechNodeParams};

/// Applies an arbitrary cut/scale recipe to a small exact multiplier.
fn transformed(width: u32, k: u32, picks: &[(usize, bool)]) -> Netlist {
    let base = build_exact_multiplier(width).expect("base");
    let scaled = precision_scale(&base, k).expect("scale");
    let gates: Vec<_> =
        scaled.gates().iter().filter(|g| !g.kind.is_const()).map(|g| g.id).collect();
    let mut cuts: Vec<Cut> = Vec::new();
    if !gates.is_empty() {
        for &(pick, value) in picks {
            let gate_id = gates[pick % gates.len()];
            if !cuts.iter().any(|c| c.gate_id == gate_id) {
                cuts.push(Cut { gate_id, value });
            }
        }
    }
    prune(&scaled, &cuts).expect("prune")
}

fn recipe() -> impl Strategy<Value = (u32, u32, Vec<(usize, bool)>)> {
    (2u32..=5).prop_flat_map(|width| {
        (
            Just(width),
            0..=width,
            prop::collection::vec((0usize..512, any::<bool>()), 0..8),
        )
    })
}

proptest! {
    #[test]
    fn text_round_trip_preserves_behavior((width, k, picks) in recipe()) {
        let netlist = transformed(width, k, &picks);
        let reparsed = Netlist::from_text(&netlist.to_text()).expect("reparse");
        prop_assert_eq!(netlist.to_text(), reparsed.to_text());
        prop_assert_eq!(netlist.gates().len(), reparsed.gates().len());
        let n = 1u64 << width;
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(
                    netlist.simulate(a, b).expect("original"),
                    reparsed.simulate(a, b).expect("reparsed")
                );
            }
        }
    }

    #[test]
    fn transforms_never_grow_area_and_metrics_stay_bounded((width, k, picks) in recipe()) {
        let table = GateAreaTable::default();
        let base = build_exact_multiplier(width).expect("base");
        let variant = transformed(width, k, &picks);
        prop_assert!(variant.area(&table) <= base.area(&table));
        let m = error_metrics(&variant).expect("metrics");
        prop_assert!(m.med >= 0.0 && m.med <= m.wce);
        prop_assert!(m.mred >= 0.0);
        prop_assert!((0.0..=1.0).contains(&m.er));
        // The approximate output spans all 2B product bits, so the worst
        // absolute error is bounded by the full output range, not by the
        // largest exact product.
        let max_error = ((1u64 << (2 * width)) - 1) as f64;
        prop_assert!(m.wce <= max_error);
        if m.er == 0.0 {
            prop_assert!(m.is_exact());
        }
    }

    #[test]
    fn tying_more_operand_bits_only_hurts(width in 2u32..=6, k in 0u32..=5) {
        prop_assume!(k < width);
        let table = GateAreaTable::default();
        let base = build_exact_multiplier(width).expect("base");
        let looser = precision_scale(&base, k).expect("scale");
        let tighter = precision_scale(&base, k + 1).expect("scale");
        prop_assert!(tighter.area(&table) <= looser.area(&table));
        let m_loose = error_metrics(&looser).expect("metrics");
        let m_tight = error_metrics(&tighter).expect("metrics");
        prop_assert!(m_tight.med >= m_loose.med);
        prop_assert!(m_tight.er >= m_loose.er);
        prop_assert!(m_tight.wce >= m_loose.wce);
    }

    #[test]
    fn carbon_quantities_stay_in_range(
        ci_fab in 100.0f64..1200.0,
        epa in 0.005f64..0.05,
        c_gas in 0.0f64..10.0,
        c_material in 0.0f64..10.0,
        si_frac in 0.0f64..1.0,
        defect_density in 0.0f64..0.02,
        yield_alpha in 1.0f64..10.0,
        die_area in 0.1f64..2000.0,
    ) {
        let processed = ci_fab * epa + c_gas + c_material;
        let params = TechNodeParams {
            node_nm: 7,
            ci_fab,
            epa,
            c_gas,
            c_material,
            cfpa_si: processed * si_frac,
            defect_density,
            yield_alpha,
            wafer_diameter: 300.0,
            edge_exclusion_mm: None,
        };
        params.validate().expect("valid draw");
        let y: f64 = yield_fraction(die_area, &params).expect("yield");
        prop_assert!(y > 0.0 && y <= 1.0);
        let per_area: f64 = cfpa(die_area, &params).expect("cfpa");
        prop_assert!(per_area >= processed);
        let dies = dies_per_wafer(die_area, params.wafer_diameter).expect("dies");
        prop_assert!(dies >= 1);
        let result = embodied_carbon(die_area, &params).expect("embodied");
        prop_assert!(result.embodied > 0.0);
        prop_assert!(result.wasted_area >= 0.0);
        prop_assert!(result.embodied >= per_area * die_area);
    }
}
