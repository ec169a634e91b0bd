//! Gate-level netlists and their evaluation.
//!
//! A netlist is a topologically ordered list of gates over a shared net-id
//! space. Nets `0..B` are operand `a` (LSB first), nets `B..2B` are operand
//! `b`, and every gate's output net is its own id, which must be `>= 2B` and
//! strictly greater than all of its input ids. That ordering makes
//! simulation a single forward pass.
//!
//! Text format (one netlist per file):
//!
//! ```text
//! B=8
//! 16 AND 0 8
//! 17 XOR 16 3
//! ...
//! PO 16 17 ... (2B net ids, product LSB first)
//! ```
//!
//! Lines starting with `#` and blank lines are ignored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NetId = usize;

pub const MIN_BITWIDTH: u32 = 2;
pub const MAX_BITWIDTH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Inv,
    Const0,
    Const1,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Inv => 1,
            _ => 2,
        }
    }

    pub fn is_const(self) -> bool {
        matches!(self, GateKind::Const0 | GateKind::Const1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Inv => "INV",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "XOR" => GateKind::Xor,
            "NAND" => GateKind::Nand,
            "NOR" => GateKind::Nor,
            "INV" => GateKind::Inv,
            "CONST0" => GateKind::Const0,
            "CONST1" => GateKind::Const1,
            other => return Err(Error::Parse(format!("unknown gate kind {other:?}"))),
        })
    }
}

/// Per-kind area in gate-equivalents (one NAND2 = 1.0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateAreaTable {
    pub nand: f64,
    pub nor: f64,
    pub inv: f64,
    pub and: f64,
    pub or: f64,
    pub xor: f64,
    #[serde(rename = "const")]
    pub const_: f64,
}

impl Default for GateAreaTable {
    fn default() -> Self {
        GateAreaTable {
            nand: 1.0,
            nor: 1.0,
            inv: 0.5,
            and: 1.5,
            or: 1.5,
            xor: 2.5,
            const_: 0.0,
        }
    }
}

impl GateAreaTable {
    pub fn area(&self, kind: GateKind) -> f64 {
        match kind {
            GateKind::And => self.and,
            GateKind::Or => self.or,
            GateKind::Xor => self.xor,
            GateKind::Nand => self.nand,
            GateKind::Nor => self.nor,
            GateKind::Inv => self.inv,
            GateKind::Const0 | GateKind::Const1 => self.const_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub id: NetId,
    pub kind: GateKind,
    /// Only the first `kind.arity()` entries are meaningful.
    pub inputs: [NetId; 2],
}

impl Gate {
    pub fn live_inputs(&self) -> &[NetId] {
        &self.inputs[..self.kind.arity()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    bitwidth: u32,
    gates: Vec<Gate>,
    outputs: Vec<NetId>,
}

impl Netlist {
    pub fn new(bitwidth: u32, gates: Vec<Gate>, outputs: Vec<NetId>) -> Result<Self> {
        let nl = Netlist { bitwidth, gates, outputs };
        nl.validate()?;
        Ok(nl)
    }

    pub fn bitwidth(&self) -> u32 {
        self.bitwidth
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gate(&self, id: NetId) -> Option<&Gate> {
        // Ids are strictly ascending, so binary search applies.
        self.gates
            .binary_search_by_key(&id, |g| g.id)
            .ok()
            .map(|idx| &self.gates[idx])
    }

    pub fn num_primary_inputs(&self) -> usize {
        2 * self.bitwidth as usize
    }

    /// Length of a net scratch buffer covering every referenced id.
    pub fn net_buffer_len(&self) -> usize {
        let max_gate = self.gates.last().map_or(0, |g| g.id);
        let max_po = self.outputs.iter().copied().max().unwrap_or(0);
        max_gate.max(max_po).max(self.num_primary_inputs() - 1) + 1
    }

    fn validate(&self) -> Result<()> {
        if !(MIN_BITWIDTH..=MAX_BITWIDTH).contains(&self.bitwidth) {
            return Err(Error::InvalidArgument(format!(
                "bitwidth must be in {MIN_BITWIDTH}..={MAX_BITWIDTH}, got {}",
                self.bitwidth
            )));
        }
        let n_pi = self.num_primary_inputs();
        let mut defined = vec![false; self.net_buffer_len()];
        for slot in defined.iter_mut().take(n_pi) {
            *slot = true;
        }
        let mut prev: Option<NetId> = None;
        for gate in &self.gates {
            if gate.id < n_pi {
                return Err(Error::Parse(format!(
                    "gate id {} collides with primary-input net ids 0..{n_pi}",
                    gate.id
                )));
            }
            if let Some(p) = prev {
                if gate.id <= p {
                    return Err(Error::Parse(format!(
                        "gate ids must be strictly ascending ({} after {p})",
                        gate.id
                    )));
                }
            }
            for &input in gate.live_inputs() {
                if input >= gate.id || !defined[input] {
                    return Err(Error::Parse(format!(
                        "gate {} reads undefined or later net {input}",
                        gate.id
                    )));
                }
            }
            defined[gate.id] = true;
            prev = Some(gate.id);
        }
        if self.outputs.len() != n_pi {
            return Err(Error::Parse(format!(
                "expected {n_pi} primary outputs, got {}",
                self.outputs.len()
            )));
        }
        for &po in &self.outputs {
            if !defined[po] {
                return Err(Error::Parse(format!("primary output references undefined net {po}")));
            }
        }
        Ok(())
    }

    /// Sum of gate-equivalents over non-constant gates.
    pub fn area(&self, table: &GateAreaTable) -> f64 {
        self.gates
            .iter()
            .filter(|g| !g.kind.is_const())
            .map(|g| table.area(g.kind))
            .fold(0.0, |acc, a| acc + a)
    }

    /// Evaluates the netlist on one operand pair.
    pub fn simulate(&self, a: u64, b: u64) -> Result<u64> {
        let b_width = self.bitwidth;
        let limit = 1u64 << b_width;
        if a >= limit || b >= limit {
            return Err(Error::InvalidArgument(format!(
                "operands must be < 2^{b_width}, got ({a}, {b})"
            )));
        }
        let mut nets = vec![false; self.net_buffer_len()];
        for bit in 0..b_width as usize {
            nets[bit] = (a >> bit) & 1 == 1;
            nets[b_width as usize + bit] = (b >> bit) & 1 == 1;
        }
        for gate in &self.gates {
            let x = nets[gate.inputs[0]];
            let y = nets[gate.inputs[1]];
            nets[gate.id] = match gate.kind {
                GateKind::And => x & y,
                GateKind::Or => x | y,
                GateKind::Xor => x ^ y,
                GateKind::Nand => !(x & y),
                GateKind::Nor => !(x | y),
                GateKind::Inv => !x,
                GateKind::Const0 => false,
                GateKind::Const1 => true,
            };
        }
        let mut product = 0u64;
        for (bit, &po) in self.outputs.iter().enumerate() {
            if nets[po] {
                product |= 1 << bit;
            }
        }
        Ok(product)
    }

    /// 64-way bit-parallel forward pass. `scratch[net]` carries one case per
    /// bit lane; the caller pre-loads the primary-input words and reads the
    /// output words afterwards.
    pub(crate) fn eval_words(&self, scratch: &mut [u64]) {
        for gate in &self.gates {
            let x = scratch[gate.inputs[0]];
            let y = scratch[gate.inputs[1]];
            scratch[gate.id] = match gate.kind {
                GateKind::And => x & y,
                GateKind::Or => x | y,
                GateKind::Xor => x ^ y,
                GateKind::Nand => !(x & y),
                GateKind::Nor => !(x | y),
                GateKind::Inv => !x,
                GateKind::Const0 => 0,
                GateKind::Const1 => !0,
            };
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("B={}\n", self.bitwidth));
        for gate in &self.gates {
            out.push_str(&format!("{} {}", gate.id, gate.kind.as_str()));
            for input in gate.live_inputs() {
                out.push_str(&format!(" {input}"));
            }
            out.push('\n');
        }
        out.push_str("PO");
        for po in &self.outputs {
            out.push_str(&format!(" {po}"));
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut bitwidth: Option<u32> = None;
        let mut gates = Vec::new();
        let mut outputs: Option<Vec<NetId>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix("B=") {
                if bitwidth.is_some() {
                    return Err(err("duplicate bitwidth header".into()));
                }
                bitwidth = Some(
                    rest.trim()
                        .parse()
                        .map_err(|e| err(format!("bad bitwidth: {e}")))?,
                );
                continue;
            }
            if bitwidth.is_none() {
                return Err(err("expected `B=<bitwidth>` header first".into()));
            }
            if let Some(rest) = line.strip_prefix("PO") {
                if outputs.is_some() {
                    return Err(err("duplicate PO line".into()));
                }
                let ids = rest
                    .split_whitespace()
                    .map(|tok| tok.parse::<NetId>().map_err(|e| err(format!("bad net id: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                outputs = Some(ids);
                continue;
            }
            if outputs.is_some() {
                return Err(err("gate line after PO line".into()));
            }
            let mut toks = line.split_whitespace();
            let id: NetId = toks
                .next()
                .ok_or_else(|| err("empty gate line".into()))?
                .parse()
                .map_err(|e| err(format!("bad gate id: {e}")))?;
            let kind = GateKind::parse(toks.next().ok_or_else(|| err("missing gate kind".into()))?)
                .map_err(|e| err(e.to_string()))?;
            let ins: Vec<NetId> = toks
                .map(|tok| tok.parse::<NetId>().map_err(|e| err(format!("bad input net: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if ins.len() != kind.arity() {
                return Err(err(format!(
                    "{} expects {} inputs, got {}",
                    kind.as_str(),
                    kind.arity(),
                    ins.len()
                )));
            }
            let mut inputs = [0usize; 2];
            inputs[..ins.len()].copy_from_slice(&ins);
            gates.push(Gate { id, kind, inputs });
        }
        let bitwidth = bitwidth.ok_or_else(|| Error::Parse("missing `B=` header".into()))?;
        let outputs = outputs.ok_or_else(|| Error::Parse("missing PO line".into()))?;
        Netlist::new(bitwidth, gates, outputs)
    }
}

/// Incremental netlist builder that keeps the topological-id invariant.
pub(crate) struct NetlistBuilder {
    bitwidth: u32,
    gates: Vec<Gate>,
    next_id: NetId,
}

impl NetlistBuilder {
    pub fn new(bitwidth: u32) -> Self {
        let next_id = 2 * bitwidth as usize;
        NetlistBuilder { bitwidth, gates: Vec::new(), next_id }
    }

    pub fn input_a(&self, bit: u32) -> NetId {
        bit as usize
    }

    pub fn input_b(&self, bit: u32) -> NetId {
        (self.bitwidth + bit) as usize
    }

    pub fn push(&mut self, kind: GateKind, inputs: &[NetId]) -> NetId {
        debug_assert_eq!(inputs.len(), kind.arity());
        let id = self.next_id;
        self.next_id += 1;
        let mut arr = [0usize; 2];
        arr[..inputs.len()].copy_from_slice(inputs);
        self.gates.push(Gate { id, kind, inputs: arr });
        id
    }

    pub fn finish(self, outputs: Vec<NetId>) -> Result<Netlist> {
        Netlist::new(self.bitwidth, self.gates, outputs)
    }
}

/// Builds the exact unsigned array multiplier: `B*B` AND partial products
/// accumulated row by row with ripple half/full adders, adders decomposed to
/// XOR/AND/OR.
pub fn build_exact_multiplier(bitwidth: u32) -> Result<Netlist> {
    if !(MIN_BITWIDTH..=MAX_BITWIDTH).contains(&bitwidth) {
        return Err(Error::InvalidArgument(format!(
            "bitwidth must be in {MIN_BITWIDTH}..={MAX_BITWIDTH}, got {bitwidth}"
        )));
    }
    let mut b = NetlistBuilder::new(bitwidth);
    let width = bitwidth as usize;
    // acc[w] is the running sum bit of weight w, if any.
    let mut acc: Vec<Option<NetId>> = vec![None; 2 * width];

    // Adds up to three operand nets of equal weight; returns (sum, carry).
    fn add3(
        b: &mut NetlistBuilder,
        x: Option<NetId>,
        y: Option<NetId>,
        z: Option<NetId>,
    ) -> (Option<NetId>, Option<NetId>) {
        let ops: Vec<NetId> = [x, y, z].into_iter().flatten().collect();
        match ops.as_slice() {
            [] => (None, None),
            [one] => (Some(*one), None),
            [p, q] => {
                let sum = b.push(GateKind::Xor, &[*p, *q]);
                let carry = b.push(GateKind::And, &[*p, *q]);
                (Some(sum), Some(carry))
            }
            [p, q, r] => {
                let s1 = b.push(GateKind::Xor, &[*p, *q]);
                let sum = b.push(GateKind::Xor, &[s1, *r]);
                let c1 = b.push(GateKind::And, &[*p, *q]);
                let c2 = b.push(GateKind::And, &[s1, *r]);
                let carry = b.push(GateKind::Or, &[c1, c2]);
                (Some(sum), Some(carry))
            }
            _ => unreachable!(),
        }
    }

    for j in 0..width {
        let mut carry: Option<NetId> = None;
        for i in 0..width {
            let w = i + j;
            let pp = b.push(GateKind::And, &[b.input_a(i as u32), b.input_b(j as u32)]);
            let (sum, c_out) = add3(&mut b, acc[w], Some(pp), carry);
            acc[w] = sum;
            carry = c_out;
        }
        let mut w = width + j;
        while let Some(c) = carry {
            let (sum, c_out) = add3(&mut b, acc[w], Some(c), None);
            acc[w] = sum;
            carry = c_out;
            w += 1;
        }
    }

    let mut outputs = Vec::with_capacity(2 * width);
    let mut const0: Option<NetId> = None;
    for slot in acc {
        match slot {
            Some(net) => outputs.push(net),
            None => {
                let id = *const0.get_or_insert_with(|| b.push(GateKind::Const0, &[]));
                outputs.push(id);
            }
        }
    }
    b.finish(outputs)
}
