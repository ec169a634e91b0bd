//! Structural approximation transforms: gate pruning and operand precision
//! scaling.
//!
//! Both transforms are implemented as one rewrite pass. Selected nets are
//! replaced by constants, constants are folded through the fan-out cone,
//! gates that collapse to wires become aliases, dead logic is removed, and
//! the survivors are renumbered densely so the result is a valid netlist
//! again. The functional semantics of every untouched cone are preserved
//! exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::approxmul::netlist::{Gate, GateKind, NetId, Netlist};
use crate::error::{Error, Result};

/// A single prune directive: replace the output of gate `gate_id` with a
/// constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub gate_id: NetId,
    pub value: bool,
}

/// What an original net maps to after rewriting.
#[derive(Debug, Clone, Copy)]
enum Repl {
    Const(bool),
    Net(NetId),
}

/// Replaces the listed gate outputs with constants and simplifies. An empty
/// cut list reproduces the input netlist.
pub fn prune(base: &Netlist, cuts: &[Cut]) -> Result<Netlist> {
    let mut cut_map: BTreeMap<NetId, bool> = BTreeMap::new();
    for cut in cuts {
        if base.gate(cut.gate_id).is_none() {
            return Err(Error::InvalidArgument(format!(
                "cut references net {} which is not a gate output",
                cut.gate_id
            )));
        }
        if cut_map.insert(cut.gate_id, cut.value).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate cut for gate {}",
                cut.gate_id
            )));
        }
    }
    rewrite(base, &cut_map, 0)
}

/// Ties the `k` least-significant bits of both operands to zero and
/// simplifies the freed logic away. `k = 0` is the identity; `k = B` empties
/// the datapath entirely.
pub fn precision_scale(base: &Netlist, k: u32) -> Result<Netlist> {
    if k > base.bitwidth() {
        return Err(Error::InvalidArgument(format!(
            "precision scale {k} exceeds bitwidth {}",
            base.bitwidth()
        )));
    }
    rewrite(base, &BTreeMap::new(), k)
}

fn rewrite(base: &Netlist, cut_map: &BTreeMap<NetId, bool>, tie_lsb: u32) -> Result<Netlist> {
    let width = base.bitwidth() as usize;
    let n_pi = 2 * width;
    let mut repl: Vec<Option<Repl>> = vec![None; base.net_buffer_len()];
    for (pi, slot) in repl[..n_pi].iter_mut().enumerate() {
        let bit = (pi % width) as u32;
        *slot = if bit < tie_lsb { Some(Repl::Const(false)) } else { Some(Repl::Net(pi)) };
    }

    // Pass 1: fold and alias, keeping surviving gates under fresh dense ids.
    let mut gates: Vec<Gate> = Vec::with_capacity(base.gates().len());
    let mut next_id = n_pi;
    for gate in base.gates() {
        if let Some(&value) = cut_map.get(&gate.id) {
            repl[gate.id] = Some(Repl::Const(value));
            continue;
        }
        let resolve = |net: NetId| repl[net].expect("inputs precede gate in topological order");
        let arity = gate.kind.arity();
        let x = if arity >= 1 { Some(resolve(gate.inputs[0])) } else { None };
        let y = if arity >= 2 { Some(resolve(gate.inputs[1])) } else { None };
        let outcome = simplify(gate.kind, x, y);
        repl[gate.id] = Some(match outcome {
            Simplified::Const(v) => Repl::Const(v),
            Simplified::Alias(net) => Repl::Net(net),
            Simplified::Gate(kind, ins) => {
                let id = next_id;
                next_id += 1;
                gates.push(Gate { id, kind, inputs: ins });
                Repl::Net(id)
            }
        });
    }

    // Pass 2: resolve primary outputs; constants shared via one gate each.
    let mut const_nets: [Option<NetId>; 2] = [None, None];
    let mut outputs = Vec::with_capacity(n_pi);
    for &po in base.outputs() {
        let net = match repl[po].expect("output net must be defined") {
            Repl::Net(net) => net,
            Repl::Const(v) => *const_nets[v as usize].get_or_insert_with(|| {
                let id = next_id;
                next_id += 1;
                let kind = if v { GateKind::Const1 } else { GateKind::Const0 };
                gates.push(Gate { id, kind, inputs: [0, 0] });
                id
            }),
        };
        outputs.push(net);
    }

    // Pass 3: drop logic unreachable from the outputs, then renumber densely.
    let mut live = vec![false; next_id];
    for &po in &outputs {
        live[po] = true;
    }
    for gate in gates.iter().rev() {
        if live[gate.id] {
            for &input in gate.live_inputs() {
                live[input] = true;
            }
        }
    }
    let mut remap: Vec<NetId> = vec![usize::MAX; next_id];
    for (pi, slot) in remap.iter_mut().take(n_pi).enumerate() {
        *slot = pi;
    }
    let mut dense = Vec::with_capacity(gates.len());
    let mut dense_next = n_pi;
    for gate in &gates {
        if !live[gate.id] {
            continue;
        }
        let mut inputs = [0usize; 2];
        for (slot, &input) in inputs.iter_mut().zip(gate.inputs.iter()).take(gate.kind.arity()) {
            *slot = remap[input];
        }
        remap[gate.id] = dense_next;
        dense.push(Gate { id: dense_next, kind: gate.kind, inputs });
        dense_next += 1;
    }
    let outputs = outputs.into_iter().map(|po| remap[po]).collect();
    Netlist::new(base.bitwidth(), dense, outputs)
}

enum Simplified {
    Const(bool),
    Alias(NetId),
    Gate(GateKind, [NetId; 2]),
}

fn simplify(kind: GateKind, x: Option<Repl>, y: Option<Repl>) -> Simplified {
    use GateKind::*;
    use Repl::{Const, Net};
    match kind {
        Const0 => Simplified::Const(false),
        Const1 => Simplified::Const(true),
        Inv => match x.unwrap() {
            Const(v) => Simplified::Const(!v),
            Net(n) => Simplified::Gate(Inv, [n, 0]),
        },
        And | Or | Xor | Nand | Nor => {
            let (x, y) = (x.unwrap(), y.unwrap());
            match (x, y) {
                (Const(a), Const(b)) => Simplified::Const(apply2(kind, a, b)),
                (Const(c), Net(n)) | (Net(n), Const(c)) => one_const(kind, c, n),
                (Net(a), Net(b)) => Simplified::Gate(kind, [a, b]),
            }
        }
    }
}

fn apply2(kind: GateKind, a: bool, b: bool) -> bool {
    match kind {
        GateKind::And => a & b,
        GateKind::Or => a | b,
        GateKind::Xor => a ^ b,
        GateKind::Nand => !(a & b),
        GateKind::Nor => !(a | b),
        _ => unreachable!(),
    }
}

/// Simplifies a binary gate with one constant operand and one live net.
fn one_const(kind: GateKind, c: bool, net: NetId) -> Simplified {
    use GateKind::*;
    match (kind, c) {
        (And, false) => Simplified::Const(false),
        (And, true) => Simplified::Alias(net),
        (Or, true) => Simplified::Const(true),
        (Or, false) => Simplified::Alias(net),
        (Xor, false) => Simplified::Alias(net),
        (Xor, true) => Simplified::Gate(Inv, [net, 0]),
        (Nand, false) => Simplified::Const(true),
        (Nand, true) => Simplified::Gate(Inv, [net, 0]),
        (Nor, true) => Simplified::Const(false),
        (Nor, false) => Simplified::Gate(Inv, [net, 0]),
        _ => unreachable!(),
    }
}
