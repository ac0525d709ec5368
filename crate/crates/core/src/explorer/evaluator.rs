use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Mutex;

use thiserror::Error;

use crate::arch::{bind_channels, NetworkSpec};
use crate::complexity::count_params;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct EvaluationError(pub String);

/// Supplies top-1 accuracy (percent) for a candidate network.
///
/// Implementations must be deterministic per network. Return `true` from
/// [`AccuracyEvaluator::concurrent`] only if `evaluate` may run on several
/// threads at once.
pub trait AccuracyEvaluator {
    fn evaluate(&self, net: &NetworkSpec) -> Result<f64, EvaluationError>;

    fn concurrent(&self) -> bool {
        false
    }
}

impl<E: AccuracyEvaluator + ?Sized> AccuracyEvaluator for &E {
    fn evaluate(&self, net: &NetworkSpec) -> Result<f64, EvaluationError> {
        (**self).evaluate(net)
    }

    fn concurrent(&self) -> bool {
        (**self).concurrent()
    }
}

/// Accuracy as a smooth function of size: `clamp(55 + 8·log10(10·p), 0, 95)`
/// with `p` in millions of parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticEvaluator;

impl SyntheticEvaluator {
    pub fn accuracy_for_params(params: u64) -> f64 {
        let p = params as f64 / 1e6;
        (55.0 + 8.0 * (p * 10.0).log10()).clamp(0.0, 95.0)
    }
}

impl AccuracyEvaluator for SyntheticEvaluator {
    fn evaluate(&self, net: &NetworkSpec) -> Result<f64, EvaluationError> {
        let bound = bind_channels(net).map_err(|e| EvaluationError(e.to_string()))?;
        Ok(Self::accuracy_for_params(count_params(&bound).total_params))
    }

    fn concurrent(&self) -> bool {
        true
    }
}

/// Adapts a closure.
pub struct FnEvaluator<F>(pub F);

impl<F> AccuracyEvaluator for FnEvaluator<F>
where
    F: Fn(&NetworkSpec) -> Result<f64, EvaluationError>,
{
    fn evaluate(&self, net: &NetworkSpec) -> Result<f64, EvaluationError> {
        (self.0)(net)
    }
}

/// Runs an external program per network: the spec JSON goes to its
/// standard input, one decimal accuracy percent is read from its standard
/// output. A nonzero exit status is a failure.
#[derive(Debug, Clone)]
pub struct CommandEvaluator {
    pub program: PathBuf,
}

impl CommandEvaluator {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
        }
    }
}

impl AccuracyEvaluator for CommandEvaluator {
    fn evaluate(&self, net: &NetworkSpec) -> Result<f64, EvaluationError> {
        let fail =
            |what: &str, e: &dyn std::fmt::Display| EvaluationError(format!("{}: {what}: {e}", self.program.display()));
        let mut child = Command::new(&self.program)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| fail("spawn", &e))?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            // A program that exits without reading its input is judged by its status.
            let _ = stdin.write_all(net.to_json().as_bytes());
        }
        let output = child.wait_with_output().map_err(|e| fail("wait", &e))?;
        if !output.status.success() {
            return Err(fail("exit", &output.status));
        }
        let text = String::from_utf8_lossy(&output.stdout);
        let value: f64 = text.trim().parse().map_err(|e| fail("unparsable output", &e))?;
        if !value.is_finite() {
            return Err(fail("output", &"not finite"));
        }
        Ok(value)
    }
}

/// Caches another evaluator's results by spec digest.
pub struct Memoized<E> {
    inner: E,
    cache: Mutex<HashMap<String, f64>>,
}

impl<E> Memoized<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

impl<E: AccuracyEvaluator> AccuracyEvaluator for Memoized<E> {
    fn evaluate(&self, net: &NetworkSpec) -> Result<f64, EvaluationError> {
        let key = net.digest();
        if let Some(&hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit);
        }
        let value = self.inner.evaluate(net)?;
        self.cache.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }

    fn concurrent(&self) -> bool {
        self.inner.concurrent()
    }
}
