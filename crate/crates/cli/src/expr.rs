//! Parameterizations given as expressions, e.g. `(u, -u^2/4)`.
//!
//! Expressions use the `evalexpr` grammar with three conveniences: integer
//! literals are read as floats, the functions `exp`, `ln`, `log`, `sqrt`,
//! `sin`, `cos`, `tan`, `abs` and `pow` need no `math::` prefix, and a
//! single component may be written without parentheses.

use std::sync::Arc;

use emlab_core::constraint::{ConstraintSet, ParametricSet};
use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};

use crate::error::{CliError, Result};

const FUNCTIONS: [(&str, &str); 9] = [
    ("exp", "math::exp"),
    ("ln", "math::ln"),
    ("log", "math::ln"),
    ("sqrt", "math::sqrt"),
    ("sin", "math::sin"),
    ("cos", "math::cos"),
    ("tan", "math::tan"),
    ("abs", "math::abs"),
    ("pow", "math::pow"),
];

/// Rewrites integer literals as floats and bare function names to their
/// builtin names.
fn normalize(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == ':')
            {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            let is_call = chars[i..].iter().find(|c| !c.is_whitespace()) == Some(&'(');
            match FUNCTIONS.iter().find(|(name, _)| *name == ident) {
                Some((_, builtin)) if is_call => out.push_str(builtin),
                _ => out.push_str(&ident),
            }
        } else if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut has_dot = false;
            if i < chars.len() && chars[i] == '.' {
                has_dot = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let mantissa: String = chars[start..i].iter().collect();
            if mantissa.starts_with('.') {
                out.push('0');
            }
            out.push_str(&mantissa);
            if mantissa.ends_with('.') {
                out.push('0');
            } else if !has_dot {
                out.push_str(".0");
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    out.extend(&chars[i..j]);
                    i = j;
                }
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// A compiled map `u ↦ θ(u)` from named parameters to a point.
#[derive(Clone)]
pub struct MapExpr {
    source: String,
    params: Vec<String>,
    node: Arc<Node<DefaultNumericTypes>>,
}

impl std::fmt::Debug for MapExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MapExpr")
            .field("source", &self.source)
            .field("params", &self.params)
            .finish()
    }
}

impl MapExpr {
    pub fn parse(source: &str, params: &[String]) -> Result<Self> {
        let err = |message: String| CliError::Expr {
            expr: source.to_string(),
            message,
        };
        if params.is_empty() {
            return Err(err("at least one parameter name is required".into()));
        }
        for (i, p) in params.iter().enumerate() {
            let valid = p
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || FUNCTIONS.iter().any(|(n, _)| n == p) {
                return Err(err(format!("invalid parameter name `{p}`")));
            }
            if params[..i].contains(p) {
                return Err(err(format!("duplicate parameter name `{p}`")));
            }
        }
        let node = build_operator_tree::<DefaultNumericTypes>(&normalize(source))
            .map_err(|e| err(e.to_string()))?;
        for id in node.iter_variable_identifiers() {
            if !params.iter().any(|p| p == id) {
                return Err(err(format!("unknown variable `{id}`")));
            }
        }
        Ok(MapExpr {
            source: source.to_string(),
            params: params.to_vec(),
            node: Arc::new(node),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let err = |message: String| CliError::Expr {
            expr: self.source.clone(),
            message,
        };
        if u.len() != self.params.len() {
            return Err(err(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                u.len()
            )));
        }
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (name, v) in self.params.iter().zip(u) {
            ctx.set_value(name.clone(), Value::Float(*v))
                .map_err(|e| err(e.to_string()))?;
        }
        let value = self
            .node
            .eval_with_context(&ctx)
            .map_err(|e| err(e.to_string()))?;
        let number = |v: &Value<DefaultNumericTypes>| v.as_number().map_err(|e| err(e.to_string()));
        match &value {
            Value::Tuple(items) => items.iter().map(number).collect(),
            v => Ok(vec![number(v)?]),
        }
    }

    /// Non-finite or failing evaluations become NaN components so that
    /// minimizers treat them as outside the domain.
    fn eval_lossy(&self, u: &[f64], dim: usize) -> Vec<f64> {
        match self.eval(u) {
            Ok(v) if v.len() == dim => v,
            _ => vec![f64::NAN; dim],
        }
    }

    /// The image of `bounds` as a constraint set in `dim` coordinates. The
    /// map is checked at the centre of the box.
    pub fn into_set(
        self,
        dim: usize,
        bounds: Vec<(f64, f64)>,
        grid: Option<usize>,
    ) -> Result<ConstraintSet> {
        if bounds.len() != self.params.len() {
            return Err(CliError::Expr {
                expr: self.source.clone(),
                message: format!(
                    "{} ranges for {} parameters",
                    bounds.len(),
                    self.params.len()
                ),
            });
        }
        let centre: Vec<f64> = bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        let v = self.eval(&centre)?;
        if v.len() != dim {
            return Err(CliError::Expr {
                expr: self.source.clone(),
                message: format!("evaluates to {} components, the family has {dim}", v.len()),
            });
        }
        let map = move |u: &[f64]| self.eval_lossy(u, dim);
        let mut set = ParametricSet::new(dim, bounds, Arc::new(map))?;
        if let Some(g) = grid {
            set = set.with_grid(g);
        }
        Ok(ConstraintSet::Parametric(set))
    }
}
