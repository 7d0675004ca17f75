//! Finite Boolean functions and bases.
//!
//! A function is a packed truth table: an arity `k` and `2^k` output bits,
//! indexed by `index(a_1, ..., a_k) = sum a_i * 2^(k-i)` — the first argument
//! is the most significant bit. Arities up to [`MAX_ARITY`] are supported,
//! which is plenty for desk-scale basis work while keeping every predicate an
//! exhaustive scan.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Largest supported arity. Tables are scanned exhaustively, so the cap keeps
/// every operation instantaneous.
pub const MAX_ARITY: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoolfnError {
    #[error("arity {arity} exceeds the supported maximum {MAX_ARITY}")]
    ArityTooLarge { arity: usize },
    #[error("table for '{name}' has {got} bits, arity {arity} needs {want}")]
    TableLength {
        name: String,
        arity: usize,
        got: usize,
        want: usize,
    },
    #[error("argument index {index} out of range for arity {arity}")]
    ArgIndex { index: usize, arity: usize },
    #[error("wrong argument count: got {got}, arity is {arity}")]
    ArgCount { got: usize, arity: usize },
    #[error("{path}:{line}: {msg}")]
    BasisFile {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate function name '{0}' in basis")]
    DuplicateName(String),
    #[error("unknown function '{0}' in basis")]
    UnknownFunction(String),
}

/// A named Boolean function of fixed arity, stored as its full truth table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    name: String,
    arity: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    /// Builds a table from a bit string such as `"0111"`, most significant
    /// argument first.
    pub fn from_bits(name: &str, arity: usize, bits: &str) -> Result<Self, BoolfnError> {
        if arity > MAX_ARITY {
            return Err(BoolfnError::ArityTooLarge { arity });
        }
        let want = 1usize << arity;
        let parsed: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BoolfnError::BasisFile {
                    path: String::new(),
                    line: 0,
                    msg: format!("invalid bit '{other}' in table for '{name}'"),
                }),
            })
            .collect::<Result<_, _>>()?;
        if parsed.len() != want {
            return Err(BoolfnError::TableLength {
                name: name.to_string(),
                arity,
                got: parsed.len(),
                want,
            });
        }
        Ok(TruthTable {
            name: name.to_string(),
            arity,
            bits: parsed,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Returns the same table under a different name.
    pub fn renamed(&self, name: &str) -> TruthTable {
        TruthTable {
            name: name.to_string(),
            arity: self.arity,
            bits: self.bits.clone(),
        }
    }

    /// The output bits in index order, rendered as a `0`/`1` string.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// True when two tables denote the same function (name ignored).
    pub fn same_function(&self, other: &TruthTable) -> bool {
        self.arity == other.arity && self.bits == other.bits
    }

    /// Row index of an argument vector: first argument most significant.
    fn row(&self, args: &[bool]) -> usize {
        args.iter().fold(0, |acc, &a| (acc << 1) | usize::from(a))
    }

    /// Evaluates the function on an argument vector.
    pub fn eval(&self, args: &[bool]) -> Result<bool, BoolfnError> {
        if args.len() != self.arity {
            return Err(BoolfnError::ArgCount {
                got: args.len(),
                arity: self.arity,
            });
        }
        Ok(self.bits[self.row(args)])
    }

    /// Evaluates a row given directly as an index.
    pub fn eval_row(&self, row: usize) -> bool {
        self.bits[row]
    }

    /// Monotonicity in one argument (1-based): over every fixing of the other
    /// arguments, flipping argument `index` moves the output uniformly up or
    /// uniformly down.
    pub fn is_monotone_in_arg(&self, index: usize) -> Result<bool, BoolfnError> {
        let (inc, dec) = self.arg_effects(index)?;
        Ok(!(inc && dec))
    }

    /// Direction of a monotone argument: `true` when increasing. Returns an
    /// error for non-monotone arguments.
    pub(crate) fn is_increasing_in_arg(&self, index: usize) -> Result<bool, BoolfnError> {
        let (inc, dec) = self.arg_effects(index)?;
        debug_assert!(!(inc && dec), "argument must be monotone");
        // A constant argument (neither direction) counts as increasing.
        Ok(inc || !dec)
    }

    /// For argument `index`, whether some fixing increases the output when the
    /// argument flips 0 to 1, and whether some fixing decreases it.
    fn arg_effects(&self, index: usize) -> Result<(bool, bool), BoolfnError> {
        if index == 0 || index > self.arity {
            return Err(BoolfnError::ArgIndex {
                index,
                arity: self.arity,
            });
        }
        let bit = 1usize << (self.arity - index);
        let mut inc = false;
        let mut dec = false;
        for row in 0..self.bits.len() {
            if row & bit != 0 {
                continue;
            }
            let lo = self.bits[row];
            let hi = self.bits[row | bit];
            inc |= !lo & hi;
            dec |= lo & !hi;
        }
        Ok((inc, dec))
    }

    /// Local monotonicity: monotone in every argument. Nullary functions are
    /// locally monotone vacuously.
    pub fn is_locally_monotone(&self) -> bool {
        (1..=self.arity).all(|i| self.is_monotone_in_arg(i).expect("index in range"))
    }

    /// Affinity: every argument either always flips the output or never does;
    /// equivalently the function is `c_0 + c_1 a_1 + ... + c_k a_k` mod 2.
    pub fn is_affine(&self) -> bool {
        (1..=self.arity).all(|i| {
            let bit = 1usize << (self.arity - i);
            let mut always = true;
            let mut never = true;
            for row in 0..self.bits.len() {
                if row & bit != 0 {
                    continue;
                }
                if self.bits[row] == self.bits[row | bit] {
                    always = false;
                } else {
                    never = false;
                }
            }
            always || never
        })
    }

    /// Global monotonicity: pointwise larger inputs never lower the output.
    fn is_monotone(&self) -> bool {
        // Comparable pairs differing in one coordinate generate the order.
        (1..=self.arity).all(|i| {
            let bit = 1usize << (self.arity - i);
            (0..self.bits.len())
                .filter(|row| row & bit == 0)
                .all(|row| self.bits[row] <= self.bits[row | bit])
        })
    }

    fn preserves_zero(&self) -> bool {
        !self.bits[0]
    }

    fn preserves_one(&self) -> bool {
        self.bits[self.bits.len() - 1]
    }

    fn is_self_dual(&self) -> bool {
        let full = self.bits.len() - 1;
        (0..self.bits.len()).all(|row| self.bits[row] != self.bits[full ^ row])
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.name, self.arity, self.bit_string())
    }
}

/// Well-known tables by conventional name, usable in basis files and tests.
pub fn builtin(name: &str) -> Option<TruthTable> {
    let (arity, bits) = match name {
        "top" => (0, "1"),
        "bot" => (0, "0"),
        "not" => (1, "10"),
        "and" => (2, "0001"),
        "or" => (2, "0111"),
        "imp" => (2, "1101"),
        "iff" => (2, "1001"),
        "xor" => (2, "0110"),
        "nand" => (2, "1110"),
        "maj" => (3, "00010111"),
        _ => return None,
    };
    Some(TruthTable::from_bits(name, arity, bits).expect("builtin tables are well formed"))
}

/// An ordered collection of named functions. Order is load order and is what
/// makes synthesis and representation search deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    name: String,
    functions: Vec<TruthTable>,
}

impl Basis {
    pub fn new(name: &str, functions: Vec<TruthTable>) -> Result<Self, BoolfnError> {
        let mut seen = BTreeMap::new();
        for f in &functions {
            if seen.insert(f.name().to_string(), ()).is_some() {
                return Err(BoolfnError::DuplicateName(f.name().to_string()));
            }
        }
        Ok(Basis {
            name: name.to_string(),
            functions,
        })
    }

    /// The de Morgan basis: negation, conjunction, disjunction, constants.
    pub fn de_morgan() -> Basis {
        Basis::from_builtins("dm", &["not", "and", "or", "top", "bot"])
    }

    /// The de Morgan basis extended with bi-implication.
    pub fn extended_de_morgan() -> Basis {
        Basis::from_builtins("extdm", &["not", "and", "or", "top", "bot", "iff"])
    }

    pub fn from_builtins(name: &str, names: &[&str]) -> Basis {
        let functions = names
            .iter()
            .map(|n| builtin(n).expect("builtin name"))
            .collect();
        Basis::new(name, functions).expect("builtin names are distinct")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn functions(&self) -> &[TruthTable] {
        &self.functions
    }

    pub fn get(&self, name: &str) -> Option<&TruthTable> {
        self.functions.iter().find(|f| f.name() == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Finds a member denoting the same function as `table`, if any.
    pub fn find_function(&self, table: &TruthTable) -> Option<&TruthTable> {
        self.functions.iter().find(|f| f.same_function(table))
    }

    /// Union of two bases; on a name clash the functions must agree.
    pub fn union(&self, other: &Basis, name: &str) -> Result<Basis, BoolfnError> {
        let mut functions = self.functions.clone();
        for f in &other.functions {
            match self.get(f.name()) {
                Some(existing) if existing.same_function(f) => {}
                Some(_) => return Err(BoolfnError::DuplicateName(f.name().to_string())),
                None => functions.push(f.clone()),
            }
        }
        Basis::new(name, functions)
    }

    /// Extends with `top`/`bot` tables when missing; returns the member names
    /// that denote the constants in the result.
    pub fn with_constants(&self) -> (Basis, String, String) {
        fn fresh(functions: &[TruthTable], base: &str) -> String {
            if !functions.iter().any(|f| f.name() == base) {
                return base.to_string();
            }
            (1..)
                .map(|i| format!("{base}{i}"))
                .find(|cand| !functions.iter().any(|f| f.name() == cand))
                .expect("some candidate is unused")
        }
        let mut functions = self.functions.clone();
        let top = builtin("top").expect("builtin");
        let bot = builtin("bot").expect("builtin");
        let top_name = match self.find_function(&top) {
            Some(f) => f.name().to_string(),
            None => {
                let name = fresh(&functions, "top");
                functions.push(top.renamed(&name));
                name
            }
        };
        let bot_name = match self.find_function(&bot) {
            Some(f) => f.name().to_string(),
            None => {
                let name = fresh(&functions, "bot");
                functions.push(bot.renamed(&name));
                name
            }
        };
        let basis = Basis::new(&self.name, functions).expect("constant names are fresh");
        (basis, top_name, bot_name)
    }

    /// Post's criterion: complete iff the basis escapes all five maximal
    /// classes (0-preserving, 1-preserving, monotone, affine, self-dual).
    pub fn is_complete(&self) -> bool {
        let escapes = |pred: fn(&TruthTable) -> bool| self.functions.iter().any(|f| !pred(f));
        escapes(TruthTable::preserves_zero)
            && escapes(TruthTable::preserves_one)
            && escapes(TruthTable::is_monotone)
            && escapes(TruthTable::is_affine)
            && escapes(TruthTable::is_self_dual)
    }

    /// Loads a basis from a text file: one `name arity bits` line per
    /// function, `#` comments and blank lines ignored.
    pub fn load(path: &Path) -> Result<Basis, BoolfnError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| BoolfnError::BasisFile {
            path: shown.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("basis")
            .to_string();
        Basis::parse(&text, &stem).map_err(|e| match e {
            BoolfnError::BasisFile { line, msg, .. } => BoolfnError::BasisFile {
                path: shown.clone(),
                line,
                msg,
            },
            other => other,
        })
    }

    /// Parses basis text; `name` becomes the basis name.
    pub fn parse(text: &str, name: &str) -> Result<Basis, BoolfnError> {
        let mut functions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let err = |msg: String| BoolfnError::BasisFile {
                path: String::new(),
                line: idx + 1,
                msg,
            };
            let fname = parts.next().ok_or_else(|| err("missing name".into()))?;
            let arity: usize = parts
                .next()
                .ok_or_else(|| err("missing arity".into()))?
                .parse()
                .map_err(|_| err("arity is not a number".into()))?;
            let bits = parts.next().ok_or_else(|| err("missing table bits".into()))?;
            if parts.next().is_some() {
                return Err(err("trailing tokens after table".into()));
            }
            if arity > MAX_ARITY {
                return Err(err(format!(
                    "arity {arity} exceeds the supported maximum {MAX_ARITY}"
                )));
            }
            let table = TruthTable::from_bits(fname, arity, bits).map_err(|e| match e {
                BoolfnError::TableLength {
                    arity, got, want, ..
                } => err(format!("table has {got} bits, arity {arity} needs {want}")),
                BoolfnError::BasisFile { msg, .. } => err(msg),
                other => other,
            })?;
            functions.push(table);
        }
        Basis::new(name, functions)
    }
}
