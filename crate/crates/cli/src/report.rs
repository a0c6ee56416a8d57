//! Report document and its JSON encoding.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monodromy: Option<MonodromyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcps: Option<Vec<GcpReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrink: Option<ShrinkReport>,
    pub diagnostics: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            monodromy: None,
            gcps: None,
            shrink: None,
            diagnostics: Map::new(),
        }
    }

    pub fn diag(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics
            .insert(key.to_string(), serde_json::to_value(value).expect("diagnostic values serialize"));
    }
}

#[derive(Debug, Serialize)]
pub struct MonodromyReport {
    pub permutation: Vec<usize>,
    pub cycles: Vec<Vec<usize>>,
    pub phases: Vec<f64>,
    pub phase_sum_mod_pi: f64,
    pub phase_sum_mod_2pi: f64,
    pub pattern_residual: f64,
    pub det_drift: f64,
}

#[derive(Debug, Serialize)]
pub struct GcpReport {
    pub location: [f64; 2],
    pub status: &'static str,
    pub source: &'static str,
    #[serde(rename = "F_residual")]
    pub f_residual: f64,
    #[serde(rename = "DF")]
    pub df: [[f64; 2]; 2],
    #[serde(rename = "DF_condition")]
    pub df_condition: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct ShrinkReport {
    pub anchor: [f64; 2],
    pub scales: Vec<f64>,
    pub phases: Vec<Vec<f64>>,
    pub deviations: Vec<Vec<f64>>,
    pub exponent: Vec<Option<f64>>,
    pub hypothesis: &'static str,
    pub exact: bool,
    pub class: &'static str,
}

/// Pretty output with every float at 17 significant digits.
struct Fixed17<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json(report: &Report) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17(PrettyFormatter::new()));
    report.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}
