//! The expression tape: an append-only, topologically ordered list of node
//! records whose operand lists and payloads live in an [`Arena`].
//!
//! Node identity is the record's index. Every operand of a record has a
//! smaller index than the record itself, so visiting records in decreasing
//! index order is a valid reverse sweep.

use std::cell::{Ref, RefCell, RefMut};
use std::fmt;

use crate::arena::{Arena, ArenaMark, Region};
use crate::error::{AdError, Result};
use crate::var::Var;

/// Position of a node on its tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// How a node passes its adjoint to its operands during the reverse sweep.
///
/// Operand and payload layouts per rule (`a`, `b` operands, `c` payload):
///
/// | rule | operands | payload | propagation |
/// |------|----------|---------|-------------|
/// | `Const` | none | none | none |
/// | `Add` / `Sub` | a, b | none | a += adj, b ±= adj |
/// | `Mul` | a, b | none | a += adj·b, b += adj·a |
/// | `Div` | a, b | none | a += adj/b, b -= adj·val/b |
/// | `Neg` | a | none | a -= adj |
/// | `AddScalar`, `SubScalar` | a | none | a += adj |
/// | `ScalarSub` | b | none | b -= adj |
/// | `MulScalar` / `DivScalar` | a | c | a += adj·c, a += adj/c |
/// | `ScalarDiv` | b | none | b -= adj·val/b |
/// | `Log`, `Exp`, `Sqrt`, `Square` | a | none | lazy unary partials |
/// | `PowScalar` | a | exponent | a += adj·e·val/a |
/// | `Pow` | a, b | none | skipped when a == 0 |
/// | `ScalarPow` | b | base | b += adj·ln(base)·val |
/// | `Sum` | x₀..xₙ | none | xᵢ += adj |
/// | `LogSumExp` | x₀..xₙ | none | xᵢ += adj·exp(xᵢ − val) |
/// | `Dot` | a₀..aₙ, b₀..bₙ | none | aᵢ += adj·bᵢ, bᵢ += adj·aᵢ |
/// | `DotScalar`, `Precomputed` | x₀..xₙ | g₀..gₙ | xᵢ += adj·gᵢ |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddScalar,
    SubScalar,
    ScalarSub,
    MulScalar,
    DivScalar,
    ScalarDiv,
    Log,
    Exp,
    Sqrt,
    Square,
    PowScalar,
    Pow,
    ScalarPow,
    Sum,
    LogSumExp,
    Dot,
    DotScalar,
    Precomputed,
}

enum Shape {
    Fixed { operands: usize, payload: usize },
    Variadic,
    PairedOperands,
    Parallel,
}

impl Rule {
    fn shape(self) -> Shape {
        use Rule::*;
        let fixed = |operands, payload| Shape::Fixed { operands, payload };
        match self {
            Const => fixed(0, 0),
            Add | Sub | Mul | Div | Pow => fixed(2, 0),
            Neg | AddScalar | SubScalar | ScalarSub | ScalarDiv => fixed(1, 0),
            Log | Exp | Sqrt | Square => fixed(1, 0),
            MulScalar | DivScalar | PowScalar | ScalarPow => fixed(1, 1),
            Sum | LogSumExp => Shape::Variadic,
            Dot => Shape::PairedOperands,
            DotScalar | Precomputed => Shape::Parallel,
        }
    }

    pub fn name(self) -> &'static str {
        use Rule::*;
        match self {
            Const => "const",
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Div => "div",
            Neg => "neg",
            AddScalar => "add_scalar",
            SubScalar => "sub_scalar",
            ScalarSub => "scalar_sub",
            MulScalar => "mul_scalar",
            DivScalar => "div_scalar",
            ScalarDiv => "scalar_div",
            Log => "log",
            Exp => "exp",
            Sqrt => "sqrt",
            Square => "square",
            PowScalar => "pow_scalar",
            Pow => "pow",
            ScalarPow => "scalar_pow",
            Sum => "sum",
            LogSumExp => "log_sum_exp",
            Dot => "dot",
            DotScalar => "dot_scalar",
            Precomputed => "precomputed",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeRecord {
    value: f64,
    adjoint: f64,
    rule: Rule,
    operands: Region,
    // reals for most rules; the second operand array for `Rule::Dot`
    payload: Region,
}

/// Tape length and arena usage captured by [`Tape::mark`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeMark {
    node_count: usize,
    arena: ArenaMark,
}

impl TapeMark {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arena_offset(&self) -> usize {
        self.arena.used_bytes()
    }
}

#[derive(Debug, Default)]
pub(crate) struct TapeInner {
    records: Vec<NodeRecord>,
    arena: Arena,
}

/// An expression tape for one differentiation episode.
///
/// All recording goes through a shared reference so that many [`Var`]
/// handles can borrow the tape at once; [`Tape::recover`] and
/// [`Tape::free_all`] need exclusive access, which guarantees no handle
/// outlives the nodes it refers to.
#[derive(Debug, Default)]
pub struct Tape {
    inner: RefCell<TapeInner>,
}

#[inline]
fn id_at(words: &[u64], i: usize) -> usize {
    words[i] as usize
}

impl TapeInner {
    #[inline]
    pub(crate) fn value(&self, id: usize) -> f64 {
        self.records[id].value
    }

    pub(crate) fn alloc_ids<I>(&mut self, count: usize, ids: I) -> Region
    where
        I: IntoIterator<Item = usize>,
    {
        self.arena
            .alloc_words_from(count, ids.into_iter().map(|i| i as u64))
    }

    pub(crate) fn alloc_reals<I>(&mut self, count: usize, reals: I) -> Region
    where
        I: IntoIterator<Item = f64>,
    {
        self.arena
            .alloc_words_from(count, reals.into_iter().map(f64::to_bits))
    }

    #[inline]
    pub(crate) fn push_regions(
        &mut self,
        value: f64,
        rule: Rule,
        operands: Region,
        payload: Region,
    ) -> usize {
        let id = self.records.len();
        self.records.push(NodeRecord {
            value,
            adjoint: 0.0,
            rule,
            operands,
            payload,
        });
        id
    }

    #[inline]
    pub(crate) fn push(
        &mut self,
        value: f64,
        rule: Rule,
        operands: &[usize],
        payload: &[f64],
    ) -> usize {
        let ops = self.alloc_ids(operands.len(), operands.iter().copied());
        let pl = self.alloc_reals(payload.len(), payload.iter().copied());
        self.push_regions(value, rule, ops, pl)
    }

    pub(crate) fn ids_of(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        self.arena.words(region).iter().map(|&w| w as usize)
    }

    fn chain(&mut self, i: usize) {
        let rec = self.records[i];
        let adj = rec.adjoint;
        let val = rec.value;
        let records = &mut self.records;
        let ops = self.arena.words(rec.operands);
        match rec.rule {
            Rule::Const => {}
            Rule::Add => {
                records[id_at(ops, 0)].adjoint += adj;
                records[id_at(ops, 1)].adjoint += adj;
            }
            Rule::Sub => {
                records[id_at(ops, 0)].adjoint += adj;
                records[id_at(ops, 1)].adjoint -= adj;
            }
            Rule::Mul => {
                let (a, b) = (id_at(ops, 0), id_at(ops, 1));
                let (va, vb) = (records[a].value, records[b].value);
                records[a].adjoint += adj * vb;
                records[b].adjoint += adj * va;
            }
            Rule::Div => {
                let (a, b) = (id_at(ops, 0), id_at(ops, 1));
                let vb = records[b].value;
                records[a].adjoint += adj / vb;
                records[b].adjoint -= adj * val / vb;
            }
            Rule::Neg => records[id_at(ops, 0)].adjoint -= adj,
            Rule::AddScalar | Rule::SubScalar => records[id_at(ops, 0)].adjoint += adj,
            Rule::ScalarSub => records[id_at(ops, 0)].adjoint -= adj,
            Rule::MulScalar => {
                let c = f64::from_bits(self.arena.words(rec.payload)[0]);
                records[id_at(ops, 0)].adjoint += adj * c;
            }
            Rule::DivScalar => {
                let c = f64::from_bits(self.arena.words(rec.payload)[0]);
                records[id_at(ops, 0)].adjoint += adj / c;
            }
            Rule::ScalarDiv => {
                let b = id_at(ops, 0);
                let vb = records[b].value;
                records[b].adjoint -= adj * val / vb;
            }
            Rule::Log => {
                let a = id_at(ops, 0);
                let va = records[a].value;
                records[a].adjoint += adj / va;
            }
            Rule::Exp => records[id_at(ops, 0)].adjoint += adj * val,
            Rule::Sqrt => records[id_at(ops, 0)].adjoint += adj / (2.0 * val),
            Rule::Square => {
                let a = id_at(ops, 0);
                let va = records[a].value;
                records[a].adjoint += adj * 2.0 * va;
            }
            Rule::PowScalar => {
                let e = f64::from_bits(self.arena.words(rec.payload)[0]);
                let a = id_at(ops, 0);
                let va = records[a].value;
                records[a].adjoint += adj * e * val / va;
            }
            Rule::Pow => {
                let (a, b) = (id_at(ops, 0), id_at(ops, 1));
                let (va, vb) = (records[a].value, records[b].value);
                if va == 0.0 {
                    return;
                }
                records[a].adjoint += adj * vb * val / va;
                records[b].adjoint += adj * va.ln() * val;
            }
            Rule::ScalarPow => {
                let base = f64::from_bits(self.arena.words(rec.payload)[0]);
                records[id_at(ops, 0)].adjoint += adj * base.ln() * val;
            }
            Rule::Sum => {
                for &o in ops {
                    records[o as usize].adjoint += adj;
                }
            }
            Rule::LogSumExp => {
                if val == f64::NEG_INFINITY {
                    return;
                }
                for &o in ops {
                    let o = o as usize;
                    let w = (records[o].value - val).exp();
                    records[o].adjoint += adj * w;
                }
            }
            Rule::Dot => {
                let other = self.arena.words(rec.payload);
                for (&a, &b) in ops.iter().zip(other) {
                    let (a, b) = (a as usize, b as usize);
                    let (va, vb) = (records[a].value, records[b].value);
                    records[a].adjoint += adj * vb;
                    records[b].adjoint += adj * va;
                }
            }
            Rule::DotScalar | Rule::Precomputed => {
                let partials = self.arena.words(rec.payload);
                for (&o, &g) in ops.iter().zip(partials) {
                    records[o as usize].adjoint += adj * f64::from_bits(g);
                }
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates a tape whose arena starts with a block of `bytes` bytes.
    pub fn with_block_size(bytes: usize) -> Self {
        Tape {
            inner: RefCell::new(TapeInner {
                records: Vec::new(),
                arena: Arena::with_block_size(bytes),
            }),
        }
    }

    #[inline]
    pub(crate) fn inner(&self) -> Ref<'_, TapeInner> {
        self.inner.borrow()
    }

    #[inline]
    pub(crate) fn inner_mut(&self) -> RefMut<'_, TapeInner> {
        self.inner.borrow_mut()
    }

    pub(crate) fn var(&self, id: usize) -> Var<'_> {
        Var::from_parts(self, NodeId(id))
    }

    /// Number of node records.
    pub fn len(&self) -> usize {
        self.inner().records.len()
    }

    /// Ids of every record, oldest first.
    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.len()).map(NodeId)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Arena bytes currently in use by operand lists and payloads.
    pub fn used_bytes(&self) -> usize {
        self.inner().arena.used_bytes()
    }

    /// Arena bytes reserved across all blocks.
    pub fn reserved_bytes(&self) -> usize {
        self.inner().arena.reserved_bytes()
    }

    /// Appends a record and returns its id.
    ///
    /// Operands must already be on this tape. For [`Rule::Dot`] the operands
    /// are the two factor arrays concatenated; for [`Rule::DotScalar`] and
    /// [`Rule::Precomputed`] the payload holds one partial per operand.
    pub fn record(
        &self,
        value: f64,
        rule: Rule,
        operands: &[NodeId],
        payload: &[f64],
    ) -> Result<NodeId> {
        let mut inner = self.inner_mut();
        let len = inner.records.len();
        if let Some(bad) = operands.iter().find(|o| o.0 >= len) {
            return Err(AdError::UnknownOperand {
                operand: bad.0,
                len,
            });
        }
        let shape_error = |expected: String| AdError::RuleShape {
            rule: rule.name(),
            expected,
            got: format!("{} operands, {} payload", operands.len(), payload.len()),
        };
        let id = match rule.shape() {
            Shape::Fixed {
                operands: n,
                payload: p,
            } => {
                if operands.len() != n || payload.len() != p {
                    return Err(shape_error(format!("{n} operands, {p} payload")));
                }
                let ids: Vec<usize> = operands.iter().map(|o| o.0).collect();
                inner.push(value, rule, &ids, payload)
            }
            Shape::Variadic => {
                if !payload.is_empty() {
                    return Err(shape_error("no payload".into()));
                }
                let ids: Vec<usize> = operands.iter().map(|o| o.0).collect();
                inner.push(value, rule, &ids, &[])
            }
            Shape::PairedOperands => {
                if !operands.len().is_multiple_of(2) || !payload.is_empty() {
                    return Err(shape_error("an even operand count, no payload".into()));
                }
                let (a, b) = operands.split_at(operands.len() / 2);
                let ra = inner.alloc_ids(a.len(), a.iter().map(|o| o.0));
                let rb = inner.alloc_ids(b.len(), b.iter().map(|o| o.0));
                inner.push_regions(value, rule, ra, rb)
            }
            Shape::Parallel => {
                if operands.len() != payload.len() {
                    return Err(shape_error("one payload value per operand".into()));
                }
                let ids: Vec<usize> = operands.iter().map(|o| o.0).collect();
                inner.push(value, rule, &ids, payload)
            }
        };
        Ok(NodeId(id))
    }

    /// Records a constant node and returns a handle to it.
    pub fn constant(&self, value: f64) -> Var<'_> {
        let id = self
            .inner_mut()
            .push_regions(value, Rule::Const, Region::EMPTY, Region::EMPTY);
        self.var(id)
    }

    pub fn value(&self, id: NodeId) -> f64 {
        self.inner().records[id.0].value
    }

    pub fn adjoint(&self, id: NodeId) -> f64 {
        self.inner().records[id.0].adjoint
    }

    pub fn rule(&self, id: NodeId) -> Rule {
        self.inner().records[id.0].rule
    }

    /// All operand ids of a record, in storage order.
    pub fn operands(&self, id: NodeId) -> Vec<NodeId> {
        let inner = self.inner();
        let rec = inner.records[id.0];
        let mut ops: Vec<NodeId> = inner.ids_of(rec.operands).map(NodeId).collect();
        if rec.rule == Rule::Dot {
            ops.extend(inner.ids_of(rec.payload).map(NodeId));
        }
        ops
    }

    /// Stored constants or partials of a record (empty for lazy rules).
    pub fn payload(&self, id: NodeId) -> Vec<f64> {
        let inner = self.inner();
        let rec = inner.records[id.0];
        if rec.rule == Rule::Dot {
            return Vec::new();
        }
        inner
            .arena
            .words(rec.payload)
            .iter()
            .map(|&w| f64::from_bits(w))
            .collect()
    }

    /// Arena regions holding a record's operand list and payload.
    pub fn regions(&self, id: NodeId) -> (Region, Region) {
        let rec = self.inner().records[id.0];
        (rec.operands, rec.payload)
    }

    /// Address of an arena region, for alignment checks.
    pub fn region_ptr(&self, region: Region) -> *const u8 {
        self.inner().arena.as_ptr(region)
    }

    pub fn mark(&self) -> TapeMark {
        let inner = self.inner();
        TapeMark {
            node_count: inner.records.len(),
            arena: inner.arena.mark(),
        }
    }

    /// Discards every record above `mark`. Handles to discarded nodes must
    /// not be used afterwards.
    pub fn truncate_to(&self, mark: TapeMark) -> Result<()> {
        let mut inner = self.inner_mut();
        let len = inner.records.len();
        if mark.node_count > len || mark.arena.used_bytes() > inner.arena.used_bytes() {
            return Err(AdError::StaleMark {
                mark: mark.node_count,
                len,
            });
        }
        inner.records.truncate(mark.node_count);
        inner.arena.truncate_to(mark.arena);
        Ok(())
    }

    /// Drops every record and arena allocation, keeping reserved memory.
    pub fn recover(&mut self) {
        let inner = self.inner.get_mut();
        inner.records.clear();
        inner.arena.recover();
    }

    /// Drops every record and releases arena memory back to the initial
    /// single block.
    pub fn free_all(&mut self) {
        let inner = self.inner.get_mut();
        inner.records = Vec::new();
        inner.arena.free_all();
    }

    pub fn set_adjoint(&self, id: NodeId, adjoint: f64) {
        self.inner_mut().records[id.0].adjoint = adjoint;
    }

    pub fn zero_adjoints(&self) {
        self.zero_adjoints_from(0);
    }

    /// Zeroes adjoints of records at index `start` and above.
    pub fn zero_adjoints_from(&self, start: usize) {
        let mut inner = self.inner_mut();
        let start = start.min(inner.records.len());
        for rec in &mut inner.records[start..] {
            rec.adjoint = 0.0;
        }
    }

    /// Seeds `root` with adjoint 1 and runs every rule from the top of the
    /// tape down to index `stop`, calling `visit` before each rule.
    pub fn sweep_with<F>(&self, root: NodeId, stop: usize, mut visit: F)
    where
        F: FnMut(NodeId),
    {
        let mut inner = self.inner_mut();
        inner.records[root.0].adjoint = 1.0;
        for i in (stop..inner.records.len()).rev() {
            visit(NodeId(i));
            inner.chain(i);
        }
    }

    /// Checks that every operand precedes the record that uses it.
    pub fn is_topologically_ordered(&self) -> bool {
        (0..self.len()).all(|i| self.operands(NodeId(i)).iter().all(|o| o.0 < i))
    }
}
