//! The Wengert tape: eager forward evaluation with recorded operations,
//! reversed for gradient accumulation.

use std::collections::HashMap;

use super::{AutodiffError, GradientMap, ParamId, ParamStore, Result, Shape, Value};

/// Index of a node on its tape.
pub type NodeId = usize;

#[derive(Clone, Debug)]
enum Op {
    Const,
    Param(ParamId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Neg(NodeId),
    /// scalar * tensor, elementwise broadcast of the scalar.
    MulScalar(NodeId, NodeId),
    MulElem(NodeId, NodeId),
    /// tensor / scalar.
    DivScalar(NodeId, NodeId),
    Dot(NodeId, NodeId),
    Norm(NodeId),
    /// parameter-matrix times vector.
    MatVec(NodeId, NodeId),
    Tan(NodeId),
    Atan(NodeId),
    Tanh(NodeId),
    Artanh(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Sqrt(NodeId),
    Relu(NodeId),
    Abs(NodeId),
    Softmax(NodeId),
    MeanMany(Vec<NodeId>),
    Concat(Vec<NodeId>),
    Index(NodeId, usize),
    MulConst(NodeId, f64),
    AddConst(NodeId, f64),
    ClampMin(NodeId, f64),
    ClampMax(NodeId, f64),
    Min2(NodeId, NodeId),
}

struct Node {
    value: Value,
    op: Op,
}

/// Reverse-mode tape. Build with the `op`-named methods; values are computed
/// eagerly so intermediate results can be read back with [`Tape::value`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_leaves: HashMap<ParamId, NodeId>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Value {
        &self.nodes[id].value
    }

    pub fn data(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value.data
    }

    pub fn scalar_value(&self, id: NodeId) -> f64 {
        self.nodes[id].value.as_scalar()
    }

    pub fn shape(&self, id: NodeId) -> Shape {
        self.nodes[id].value.shape
    }

    fn push(&mut self, value: Value, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    // ---- leaves ---------------------------------------------------------

    pub fn constant(&mut self, value: Value) -> NodeId {
        self.push(value, Op::Const)
    }

    pub fn scalar(&mut self, x: f64) -> NodeId {
        self.constant(Value::scalar(x))
    }

    pub fn vector(&mut self, xs: &[f64]) -> NodeId {
        self.constant(Value::vector(xs.to_vec()))
    }

    /// Leaf bound to a stored parameter. Trainable parameters collect
    /// adjoints in `backward`; frozen ones behave as constants. Repeat calls
    /// for the same id return the same leaf so fan-out accumulates additively.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        if let Some(&n) = self.param_leaves.get(&id) {
            return n;
        }
        let p = store.get(id);
        let op = if p.trainable { Op::Param(id) } else { Op::Const };
        let n = self.push(p.value.clone(), op);
        self.param_leaves.insert(id, n);
        n
    }

    // ---- arithmetic -----------------------------------------------------

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.eval(&Op::Add(a, b)).expect("add is total");
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.eval(&Op::Sub(a, b)).expect("sub is total");
        self.push(v, Op::Sub(a, b))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Neg(a)).expect("neg is total");
        self.push(v, Op::Neg(a))
    }

    pub fn mul_scalar(&mut self, s: NodeId, x: NodeId) -> NodeId {
        assert_eq!(self.shape(s), Shape::Scalar, "mul_scalar: first operand must be scalar");
        let v = self.eval(&Op::MulScalar(s, x)).expect("mul_scalar is total");
        self.push(v, Op::MulScalar(s, x))
    }

    pub fn mul_elem(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.shape(a), self.shape(b), "mul_elem: shape mismatch");
        let v = self.eval(&Op::MulElem(a, b)).expect("mul_elem is total");
        self.push(v, Op::MulElem(a, b))
    }

    pub fn div_scalar(&mut self, x: NodeId, s: NodeId) -> Result<NodeId> {
        assert_eq!(self.shape(s), Shape::Scalar, "div_scalar: divisor must be scalar");
        let op = Op::DivScalar(x, s);
        let v = self.eval(&op)?;
        Ok(self.push(v, op))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.shape(a), self.shape(b)) {
            (Shape::Vector(n), Shape::Vector(m)) => assert_eq!(n, m, "dot: length mismatch"),
            (sa, sb) => panic!("dot expects vectors, found {sa:?} and {sb:?}"),
        }
        let v = self.eval(&Op::Dot(a, b)).expect("dot is total");
        self.push(v, Op::Dot(a, b))
    }

    pub fn norm(&mut self, a: NodeId) -> NodeId {
        assert!(
            matches!(self.shape(a), Shape::Vector(_)),
            "norm expects a vector"
        );
        let v = self.eval(&Op::Norm(a)).expect("norm is total");
        self.push(v, Op::Norm(a))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        match (self.shape(w), self.shape(x)) {
            (Shape::Matrix(_, c), Shape::Vector(n)) => {
                assert_eq!(c, n, "matvec: inner dimension mismatch")
            }
            (sw, sx) => panic!("matvec expects matrix and vector, found {sw:?} and {sx:?}"),
        }
        let v = self.eval(&Op::MatVec(w, x)).expect("matvec is total");
        self.push(v, Op::MatVec(w, x))
    }

    // ---- elementwise transcendentals -------------------------------------

    pub fn tan(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Tan(a)).expect("tan is total on finite input");
        self.push(v, Op::Tan(a))
    }

    pub fn atan(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Atan(a)).expect("atan is total");
        self.push(v, Op::Atan(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Tanh(a)).expect("tanh is total");
        self.push(v, Op::Tanh(a))
    }

    pub fn artanh(&mut self, a: NodeId) -> Result<NodeId> {
        let op = Op::Artanh(a);
        let v = self.eval(&op)?;
        Ok(self.push(v, op))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Exp(a)).expect("exp is total");
        self.push(v, Op::Exp(a))
    }

    pub fn ln(&mut self, a: NodeId) -> Result<NodeId> {
        let op = Op::Ln(a);
        let v = self.eval(&op)?;
        Ok(self.push(v, op))
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        let op = Op::Sqrt(a);
        let v = self.eval(&op)?;
        Ok(self.push(v, op))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Relu(a)).expect("relu is total");
        self.push(v, Op::Relu(a))
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let v = self.eval(&Op::Abs(a)).expect("abs is total");
        self.push(v, Op::Abs(a))
    }

    // ---- reductions and structure ----------------------------------------

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        assert!(
            matches!(self.shape(a), Shape::Vector(n) if n > 0),
            "softmax expects a nonempty vector"
        );
        let v = self.eval(&Op::Softmax(a)).expect("softmax is total");
        self.push(v, Op::Softmax(a))
    }

    pub fn mean_many(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "mean_many of empty set");
        let shape = self.shape(parts[0]);
        for &p in parts {
            assert_eq!(self.shape(p), shape, "mean_many: shape mismatch");
        }
        let op = Op::MeanMany(parts.to_vec());
        let v = self.eval(&op).expect("mean is total");
        self.push(v, op)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat of empty set");
        let op = Op::Concat(parts.to_vec());
        let v = self.eval(&op).expect("concat is total");
        self.push(v, op)
    }

    pub fn index(&mut self, a: NodeId, i: usize) -> NodeId {
        match self.shape(a) {
            Shape::Vector(n) => assert!(i < n, "index {i} out of bounds for vector of {n}"),
            s => panic!("index expects a vector, found {s:?}"),
        }
        let v = self.eval(&Op::Index(a, i)).expect("index is total");
        self.push(v, Op::Index(a, i))
    }

    pub fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.eval(&Op::MulConst(a, c)).expect("mul_const is total");
        self.push(v, Op::MulConst(a, c))
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.eval(&Op::AddConst(a, c)).expect("add_const is total");
        self.push(v, Op::AddConst(a, c))
    }

    pub fn clamp_min(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.eval(&Op::ClampMin(a, c)).expect("clamp_min is total");
        self.push(v, Op::ClampMin(a, c))
    }

    pub fn clamp_max(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.eval(&Op::ClampMax(a, c)).expect("clamp_max is total");
        self.push(v, Op::ClampMax(a, c))
    }

    pub fn min2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.shape(a), self.shape(b), "min2: shape mismatch");
        let v = self.eval(&Op::Min2(a, b)).expect("min2 is total");
        self.push(v, Op::Min2(a, b))
    }

    // ---- forward evaluation ----------------------------------------------

    fn eval(&self, op: &Op) -> Result<Value> {
        let val = |id: NodeId| &self.nodes[id].value;
        let unary = |id: NodeId, f: fn(f64) -> f64| {
            let v = val(id);
            Value { data: v.data.iter().map(|&x| f(x)).collect(), shape: v.shape }
        };
        Ok(match *op {
            Op::Const | Op::Param(_) => unreachable!("leaves carry their value"),
            Op::Add(a, b) => {
                let (va, vb) = (val(a), val(b));
                debug_assert_eq!(va.shape, vb.shape);
                Value {
                    data: va.data.iter().zip(&vb.data).map(|(x, y)| x + y).collect(),
                    shape: va.shape,
                }
            }
            Op::Sub(a, b) => {
                let (va, vb) = (val(a), val(b));
                debug_assert_eq!(va.shape, vb.shape);
                Value {
                    data: va.data.iter().zip(&vb.data).map(|(x, y)| x - y).collect(),
                    shape: va.shape,
                }
            }
            Op::Neg(a) => unary(a, |x| -x),
            Op::MulScalar(s, x) => {
                let sv = val(s).as_scalar();
                let vx = val(x);
                Value { data: vx.data.iter().map(|&v| sv * v).collect(), shape: vx.shape }
            }
            Op::MulElem(a, b) => {
                let (va, vb) = (val(a), val(b));
                Value {
                    data: va.data.iter().zip(&vb.data).map(|(x, y)| x * y).collect(),
                    shape: va.shape,
                }
            }
            Op::DivScalar(x, s) => {
                let sv = val(s).as_scalar();
                if sv.abs() < 1e-300 {
                    return Err(AutodiffError::NumericalDomain {
                        op: "div_scalar",
                        detail: format!("divisor ~ 0 ({sv:e})"),
                    });
                }
                let vx = val(x);
                Value { data: vx.data.iter().map(|&v| v / sv).collect(), shape: vx.shape }
            }
            Op::Dot(a, b) => {
                let s: f64 = val(a).data.iter().zip(&val(b).data).map(|(x, y)| x * y).sum();
                Value::scalar(s)
            }
            Op::Norm(a) => {
                let s: f64 = val(a).data.iter().map(|x| x * x).sum();
                Value::scalar(s.sqrt())
            }
            Op::MatVec(w, x) => {
                let vw = val(w);
                let vx = val(x);
                let (r, c) = match vw.shape {
                    Shape::Matrix(r, c) => (r, c),
                    _ => unreachable!(),
                };
                let mut out = vec![0.0; r];
                for i in 0..r {
                    let row = &vw.data[i * c..(i + 1) * c];
                    out[i] = row.iter().zip(&vx.data).map(|(a, b)| a * b).sum();
                }
                Value::vector(out)
            }
            Op::Tan(a) => unary(a, f64::tan),
            Op::Atan(a) => unary(a, f64::atan),
            Op::Tanh(a) => unary(a, f64::tanh),
            Op::Artanh(a) => {
                let v = val(a);
                if let Some(bad) = v.data.iter().find(|x| x.abs() >= 1.0) {
                    return Err(AutodiffError::NumericalDomain {
                        op: "artanh",
                        detail: format!("|{bad}| >= 1"),
                    });
                }
                Value { data: v.data.iter().map(|&x| x.atanh()).collect(), shape: v.shape }
            }
            Op::Exp(a) => unary(a, f64::exp),
            Op::Ln(a) => {
                let v = val(a);
                if let Some(bad) = v.data.iter().find(|&&x| x <= 0.0) {
                    return Err(AutodiffError::NumericalDomain {
                        op: "ln",
                        detail: format!("{bad} <= 0"),
                    });
                }
                Value { data: v.data.iter().map(|&x| x.ln()).collect(), shape: v.shape }
            }
            Op::Sqrt(a) => {
                let v = val(a);
                if let Some(bad) = v.data.iter().find(|&&x| x < 0.0) {
                    return Err(AutodiffError::NumericalDomain {
                        op: "sqrt",
                        detail: format!("{bad} < 0"),
                    });
                }
                Value { data: v.data.iter().map(|&x| x.sqrt()).collect(), shape: v.shape }
            }
            Op::Relu(a) => unary(a, |x| if x > 0.0 { x } else { 0.0 }),
            Op::Abs(a) => unary(a, f64::abs),
            Op::Softmax(a) => {
                let v = val(a);
                let max = v.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = v.data.iter().map(|&x| (x - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                Value { data: exps.iter().map(|&e| e / sum).collect(), shape: v.shape }
            }
            Op::MeanMany(ref parts) => {
                let shape = val(parts[0]).shape;
                let mut acc = vec![0.0; shape.len()];
                for &p in parts {
                    for (a, b) in acc.iter_mut().zip(&val(p).data) {
                        *a += *b;
                    }
                }
                let k = parts.len() as f64;
                for a in acc.iter_mut() {
                    *a /= k;
                }
                Value { data: acc, shape }
            }
            Op::Concat(ref parts) => {
                let mut data = Vec::new();
                for &p in parts {
                    data.extend_from_slice(&val(p).data);
                }
                Value::vector(data)
            }
            Op::Index(a, i) => Value::scalar(val(a).data[i]),
            Op::MulConst(a, c) => {
                let v = val(a);
                Value { data: v.data.iter().map(|&x| x * c).collect(), shape: v.shape }
            }
            Op::AddConst(a, c) => {
                let v = val(a);
                Value { data: v.data.iter().map(|&x| x + c).collect(), shape: v.shape }
            }
            Op::ClampMin(a, c) => {
                let v = val(a);
                Value { data: v.data.iter().map(|&x| x.max(c)).collect(), shape: v.shape }
            }
            Op::ClampMax(a, c) => {
                let v = val(a);
                Value { data: v.data.iter().map(|&x| x.min(c)).collect(), shape: v.shape }
            }
            Op::Min2(a, b) => {
                let (va, vb) = (val(a), val(b));
                Value {
                    data: va.data.iter().zip(&vb.data).map(|(x, y)| x.min(*y)).collect(),
                    shape: va.shape,
                }
            }
        })
    }

    /// Recompute every node's value in creation order, re-reading parameter
    /// leaves from `store`. With unchanged inputs the values reproduce
    /// bit-for-bit.
    pub fn recompute(&mut self, store: &ParamStore) -> Result<()> {
        for i in 0..self.nodes.len() {
            match self.nodes[i].op {
                Op::Const => {}
                Op::Param(id) => self.nodes[i].value = store.value(id).clone(),
                _ => {
                    let op = self.nodes[i].op.clone();
                    self.nodes[i].value = self.eval(&op)?;
                }
            }
        }
        Ok(())
    }

    // ---- backward ---------------------------------------------------------

    /// Reverse sweep from a scalar root. Adjoints accumulate additively over
    /// fan-out in a fixed single-threaded order.
    pub fn backward(&self, root: NodeId) -> Result<GradientMap> {
        let root_shape = self.shape(root);
        if root_shape != Shape::Scalar {
            return Err(AutodiffError::NonScalarRoot { shape: root_shape });
        }

        let mut adj: Vec<Option<Value>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[root] = Some(Value::scalar(1.0));
        let mut grads = GradientMap::new();

        for id in (0..=root).rev() {
            let g = match adj[id].take() {
                Some(g) => g,
                None => continue,
            };
            let val = |i: NodeId| &self.nodes[i].value;
            match self.nodes[id].op {
                Op::Const => {}
                Op::Param(pid) => grads.insert(pid, g),
                Op::Add(a, b) => {
                    acc(&mut adj, a, g.clone());
                    acc(&mut adj, b, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut adj, a, g.clone());
                    acc(&mut adj, b, scale(&g, -1.0));
                }
                Op::Neg(a) => acc(&mut adj, a, scale(&g, -1.0)),
                Op::MulScalar(s, x) => {
                    let ds: f64 = g.data.iter().zip(&val(x).data).map(|(gi, xi)| gi * xi).sum();
                    acc(&mut adj, s, Value::scalar(ds));
                    let sv = val(s).as_scalar();
                    acc(&mut adj, x, scale(&g, sv));
                }
                Op::MulElem(a, b) => {
                    let da = zip_mul(&g, val(b));
                    let db = zip_mul(&g, val(a));
                    acc(&mut adj, a, da);
                    acc(&mut adj, b, db);
                }
                Op::DivScalar(x, s) => {
                    let sv = val(s).as_scalar();
                    acc(&mut adj, x, scale(&g, 1.0 / sv));
                    let ds: f64 = g
                        .data
                        .iter()
                        .zip(&val(x).data)
                        .map(|(gi, xi)| -gi * xi / (sv * sv))
                        .sum();
                    acc(&mut adj, s, Value::scalar(ds));
                }
                Op::Dot(a, b) => {
                    let gs = g.as_scalar();
                    acc(&mut adj, a, scale(val(b), gs));
                    acc(&mut adj, b, scale(val(a), gs));
                }
                Op::Norm(a) => {
                    let n = self.nodes[id].value.as_scalar();
                    let gs = g.as_scalar();
                    // Subgradient 0 at the origin.
                    let f = if n > 0.0 { gs / n } else { 0.0 };
                    acc(&mut adj, a, scale(val(a), f));
                }
                Op::MatVec(w, x) => {
                    let vw = val(w);
                    let vx = val(x);
                    let (r, c) = match vw.shape {
                        Shape::Matrix(r, c) => (r, c),
                        _ => unreachable!(),
                    };
                    let mut dw = vec![0.0; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            dw[i * c + j] = g.data[i] * vx.data[j];
                        }
                    }
                    acc(&mut adj, w, Value::matrix(r, c, dw));
                    let mut dx = vec![0.0; c];
                    for j in 0..c {
                        let mut s = 0.0;
                        for i in 0..r {
                            s += vw.data[i * c + j] * g.data[i];
                        }
                        dx[j] = s;
                    }
                    acc(&mut adj, x, Value::vector(dx));
                }
                Op::Tan(a) => {
                    let t = &self.nodes[id].value;
                    let da = zip_map(&g, t, |gi, ti| gi * (1.0 + ti * ti));
                    acc(&mut adj, a, da);
                }
                Op::Atan(a) => {
                    let da = zip_map(&g, val(a), |gi, xi| gi / (1.0 + xi * xi));
                    acc(&mut adj, a, da);
                }
                Op::Tanh(a) => {
                    let t = &self.nodes[id].value;
                    let da = zip_map(&g, t, |gi, ti| gi * (1.0 - ti * ti));
                    acc(&mut adj, a, da);
                }
                Op::Artanh(a) => {
                    let da = zip_map(&g, val(a), |gi, xi| gi / (1.0 - xi * xi));
                    acc(&mut adj, a, da);
                }
                Op::Exp(a) => {
                    let e = &self.nodes[id].value;
                    acc(&mut adj, a, zip_mul(&g, e));
                }
                Op::Ln(a) => {
                    let da = zip_map(&g, val(a), |gi, xi| gi / xi);
                    acc(&mut adj, a, da);
                }
                Op::Sqrt(a) => {
                    let s = &self.nodes[id].value;
                    let da = zip_map(&g, s, |gi, si| gi / (2.0 * si));
                    acc(&mut adj, a, da);
                }
                Op::Relu(a) => {
                    let da = zip_map(&g, val(a), |gi, xi| if xi > 0.0 { gi } else { 0.0 });
                    acc(&mut adj, a, da);
                }
                Op::Abs(a) => {
                    let da = zip_map(&g, val(a), |gi, xi| gi * sign(xi));
                    acc(&mut adj, a, da);
                }
                Op::Softmax(a) => {
                    let y = &self.nodes[id].value;
                    let gy: f64 = g.data.iter().zip(&y.data).map(|(gi, yi)| gi * yi).sum();
                    let da = zip_map(y, &g, |yi, gi| yi * (gi - gy));
                    acc(&mut adj, a, da);
                }
                Op::MeanMany(ref parts) => {
                    let share = scale(&g, 1.0 / parts.len() as f64);
                    for &p in parts {
                        acc(&mut adj, p, share.clone());
                    }
                }
                Op::Concat(ref parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let len = val(p).data.len();
                        let piece = Value {
                            data: g.data[off..off + len].to_vec(),
                            shape: val(p).shape,
                        };
                        acc(&mut adj, p, piece);
                        off += len;
                    }
                }
                Op::Index(a, i) => {
                    let mut da = Value::zeros(val(a).shape);
                    da.data[i] = g.as_scalar();
                    acc(&mut adj, a, da);
                }
                Op::MulConst(a, c) => acc(&mut adj, a, scale(&g, c)),
                Op::AddConst(a, _) => acc(&mut adj, a, g),
                Op::ClampMin(a, c) => {
                    let da = zip_map(&g, val(a), |gi, xi| if xi > c { gi } else { 0.0 });
                    acc(&mut adj, a, da);
                }
                Op::ClampMax(a, c) => {
                    let da = zip_map(&g, val(a), |gi, xi| if xi < c { gi } else { 0.0 });
                    acc(&mut adj, a, da);
                }
                Op::Min2(a, b) => {
                    let (va, vb) = (val(a), val(b));
                    let mut da = Value::zeros(va.shape);
                    let mut db = Value::zeros(vb.shape);
                    for i in 0..g.data.len() {
                        if va.data[i] <= vb.data[i] {
                            da.data[i] = g.data[i];
                        } else {
                            db.data[i] = g.data[i];
                        }
                    }
                    acc(&mut adj, a, da);
                    acc(&mut adj, b, db);
                }
            }
        }
        Ok(grads)
    }
}

fn acc(adj: &mut [Option<Value>], id: NodeId, v: Value) {
    match &mut adj[id] {
        Some(existing) => existing.add_in_place(&v),
        slot => *slot = Some(v),
    }
}

fn scale(v: &Value, c: f64) -> Value {
    Value { data: v.data.iter().map(|&x| x * c).collect(), shape: v.shape }
}

fn zip_mul(a: &Value, b: &Value) -> Value {
    Value {
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
        shape: a.shape,
    }
}

fn zip_map(a: &Value, b: &Value, f: impl Fn(f64, f64) -> f64) -> Value {
    Value {
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
        shape: a.shape,
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
