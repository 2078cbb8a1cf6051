//! A small G-code subset: linear moves in absolute millimetre coordinates.
//!
//! Accepted words are `G0`/`G1` with `X Y Z E F`, `G21`, `G90`, `G92 E`,
//! `G28` (position becomes unknown), `G4`, `M82`/`M83` and any other `M` or
//! `T` word, which are ignored. `;TYPE:` and `;LAYER:` comments steer roles
//! and layers; every other comment is dropped.

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Point3, DUPLICATE_TOLERANCE};
use crate::metrics::{Layer, PathSegment, Role, Toolpath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GcodeError {
    #[error("line {line}: unsupported command {command}")]
    UnsupportedCommand { line: usize, command: String },
    #[error("line {line}, column {column}: malformed number {text:?}")]
    MalformedNumber { line: usize, column: usize, text: String },
    #[error("line {line}, column {column}: unexpected character {found:?}")]
    UnexpectedCharacter { line: usize, column: usize, found: char },
    #[error("line {line}, column {column}: unterminated comment")]
    UnterminatedComment { line: usize, column: usize },
    #[error("line {line}: word {word} is not valid for {command}")]
    UnexpectedWord { line: usize, word: char, command: String },
    #[error("line {line}: axis words without a preceding G0/G1")]
    MissingMotion { line: usize },
    #[error("line {line}: position unknown, the move must set {missing}")]
    UnknownPosition { line: usize, missing: String },
    #[error("line {line}: feed must be positive, got {value}")]
    InvalidFeed { line: usize, value: f64 },
}

impl GcodeError {
    pub fn line(&self) -> usize {
        match self {
            GcodeError::UnsupportedCommand { line, .. }
            | GcodeError::MalformedNumber { line, .. }
            | GcodeError::UnexpectedCharacter { line, .. }
            | GcodeError::UnterminatedComment { line, .. }
            | GcodeError::UnexpectedWord { line, .. }
            | GcodeError::MissingMotion { line }
            | GcodeError::UnknownPosition { line, .. }
            | GcodeError::InvalidFeed { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Rapid,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrusionMode {
    Absolute,
    Relative,
}

/// A linear move with the words exactly as written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Move {
    pub line: usize,
    pub motion: Motion,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub e: Option<f64>,
    /// mm/min.
    pub f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    Move(Move),
    SetExtrusionMode(ExtrusionMode),
    /// `G92 E`.
    ResetExtruder(f64),
    /// `G28`: the machine position is unknown afterwards.
    Home,
    /// `;LAYER:` comment.
    LayerMarker,
    /// `;TYPE:` comment.
    Feature(String),
}

/// Parsed program, before modal evaluation.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GcodeProgram {
    pub statements: Vec<Statement>,
}

struct Word {
    letter: char,
    value: f64,
}

fn lex_line(raw: &str, line: usize) -> Result<(Vec<Word>, Option<Statement>), GcodeError> {
    let mut directive = None;
    let mut code = raw;
    if let Some(pos) = raw.find(';') {
        let comment = raw[pos + 1..].trim();
        if let Some(rest) = comment.strip_prefix("TYPE:") {
            directive = Some(Statement::Feature(rest.trim().to_string()));
        } else if comment.starts_with("LAYER:") {
            directive = Some(Statement::LayerMarker);
        }
        code = &raw[..pos];
    }
    if let Some(pos) = code.find('*') {
        code = &code[..pos];
    }

    let chars: Vec<char> = code.chars().collect();
    let mut words = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '(' {
            match chars[i..].iter().position(|&ch| ch == ')') {
                Some(end) => {
                    i += end + 1;
                    continue;
                }
                None => return Err(GcodeError::UnterminatedComment { line, column: i + 1 }),
            }
        }
        if !c.is_ascii_alphabetic() {
            return Err(GcodeError::UnexpectedCharacter { line, column: i + 1, found: c });
        }
        i += 1;
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || matches!(chars[i], '.' | '+' | '-')) {
            i += 1;
        }
        let text: String = chars[start..i].iter().collect();
        let value = text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| GcodeError::MalformedNumber {
            line,
            column: start + 1,
            text: text.clone(),
        })?;
        words.push(Word { letter: c.to_ascii_uppercase(), value });
    }
    Ok((words, directive))
}

fn code_name(letter: char, value: f64) -> String {
    if value.fract() == 0.0 {
        format!("{letter}{}", value as i64)
    } else {
        format!("{letter}{value}")
    }
}

/// Parse `text` into statements. Line numbers count from 1.
pub fn parse_gcode(text: &str) -> Result<GcodeProgram, GcodeError> {
    let mut statements = Vec::new();
    let mut modal: Option<Motion> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (words, directive) = lex_line(raw, line)?;
        if let Some(d) = directive {
            statements.push(d);
        }
        let mut mv = Move { line, motion: Motion::Rapid, x: None, y: None, z: None, e: None, f: None };
        let mut motion: Option<Motion> = None;
        let mut axes = false;
        let mut g92 = false;
        let mut skip_params = false;
        for w in &words {
            match w.letter {
                'G' => {
                    skip_params = false;
                    match code_name('G', w.value).as_str() {
                        "G0" => motion = Some(Motion::Rapid),
                        "G1" => motion = Some(Motion::Linear),
                        "G21" | "G90" => {}
                        "G4" => skip_params = true,
                        "G28" => {
                            statements.push(Statement::Home);
                            skip_params = true;
                        }
                        "G92" => g92 = true,
                        other => return Err(GcodeError::UnsupportedCommand { line, command: other.to_string() }),
                    }
                }
                'M' => {
                    match code_name('M', w.value).as_str() {
                        "M82" => statements.push(Statement::SetExtrusionMode(ExtrusionMode::Absolute)),
                        "M83" => statements.push(Statement::SetExtrusionMode(ExtrusionMode::Relative)),
                        _ => {}
                    }
                    skip_params = true;
                }
                'T' => skip_params = true,
                'N' => {}
                'X' | 'Y' | 'Z' | 'E' | 'F' if !skip_params => {
                    let slot = match w.letter {
                        'X' => &mut mv.x,
                        'Y' => &mut mv.y,
                        'Z' => &mut mv.z,
                        'E' => &mut mv.e,
                        _ => &mut mv.f,
                    };
                    *slot = Some(w.value);
                    axes = true;
                }
                _ if skip_params => {}
                other => {
                    let command = motion.map_or("G-code".to_string(), |m| match m {
                        Motion::Rapid => "G0".into(),
                        Motion::Linear => "G1".into(),
                    });
                    return Err(GcodeError::UnexpectedWord { line, word: other, command });
                }
            }
        }
        if g92 {
            if mv.x.is_some() || mv.y.is_some() || mv.z.is_some() {
                return Err(GcodeError::UnsupportedCommand { line, command: "G92 with X/Y/Z".into() });
            }
            statements.push(Statement::ResetExtruder(mv.e.unwrap_or(0.0)));
            continue;
        }
        if let Some(f) = mv.f {
            if !(f > 0.0) {
                return Err(GcodeError::InvalidFeed { line, value: f });
            }
        }
        if let Some(m) = motion {
            modal = Some(m);
        }
        if axes {
            mv.motion = modal.ok_or(GcodeError::MissingMotion { line })?;
            statements.push(Statement::Move(mv));
        }
    }
    Ok(GcodeProgram { statements })
}

/// Share of strictly increasing consecutive E words above which a program
/// without `M82`/`M83` is read as absolute extrusion.
pub const ABSOLUTE_E_SHARE: f64 = 0.75;

impl GcodeProgram {
    /// Extrusion mode from the first `M82`/`M83`, otherwise guessed from the
    /// E sequence: absolute programs are almost monotone, relative ones are not.
    pub fn extrusion_mode(&self) -> ExtrusionMode {
        let mut last: Option<f64> = None;
        let (mut up, mut other) = (0usize, 0usize);
        for s in &self.statements {
            match s {
                Statement::SetExtrusionMode(m) => return *m,
                Statement::ResetExtruder(e) => last = Some(*e),
                Statement::Move(Move { e: Some(e), .. }) => {
                    if let Some(prev) = last {
                        if *e > prev {
                            up += 1;
                        } else {
                            other += 1;
                        }
                    }
                    last = Some(*e);
                }
                _ => {}
            }
        }
        if up + other == 0 || up as f64 >= ABSOLUTE_E_SHARE * (up + other) as f64 {
            ExtrusionMode::Absolute
        } else {
            ExtrusionMode::Relative
        }
    }

    /// Evaluate the modal state into a layered toolpath.
    ///
    /// Extruding moves become infill, or perimeter under a `;TYPE:` naming a
    /// wall, perimeter or shell. Layers follow `;LAYER:` comments when the
    /// program has any, otherwise an extruding move above the current layer
    /// height opens a new layer, so Z hops on travel moves do not.
    pub fn to_toolpath(&self) -> Result<Toolpath, GcodeError> {
        let auto_mode = self.extrusion_mode();
        let explicit_layers = self.statements.iter().any(|s| matches!(s, Statement::LayerMarker));
        let mut b = Builder::default();
        let mut mode: Option<ExtrusionMode> = None;
        let mut pos: Option<Point3> = None;
        let mut e_abs = 0.0;
        let mut feed: Option<f64> = None;
        let mut feature = Role::Infill;
        let mut pending_layer = false;

        for s in &self.statements {
            match s {
                Statement::SetExtrusionMode(m) => mode = Some(*m),
                Statement::ResetExtruder(e) => e_abs = *e,
                Statement::Home => pos = None,
                Statement::LayerMarker => pending_layer = true,
                Statement::Feature(name) => {
                    let lower = name.to_ascii_lowercase();
                    feature = if ["wall", "perimeter", "shell"].iter().any(|k| lower.contains(k)) {
                        Role::Perimeter
                    } else {
                        Role::Infill
                    };
                }
                Statement::Move(mv) => {
                    if let Some(f) = mv.f {
                        feed = Some(f / 60.0);
                    }
                    let extruding = match mv.e {
                        None => false,
                        Some(e) => {
                            let delta = match mode.unwrap_or(auto_mode) {
                                ExtrusionMode::Absolute => {
                                    let d = e - e_abs;
                                    e_abs = e;
                                    d
                                }
                                ExtrusionMode::Relative => {
                                    e_abs += e;
                                    e
                                }
                            };
                            mv.motion == Motion::Linear && delta > 0.0
                        }
                    };
                    let words = [mv.x, mv.y, mv.z];
                    if words.iter().all(Option::is_none) {
                        continue;
                    }
                    let p = match pos {
                        Some(q) => Vector3::new(mv.x.unwrap_or(q.x), mv.y.unwrap_or(q.y), mv.z.unwrap_or(q.z)),
                        None => match (mv.x, mv.y, mv.z) {
                            (Some(x), Some(y), Some(z)) => Vector3::new(x, y, z),
                            _ => {
                                let missing = ['X', 'Y', 'Z']
                                    .iter()
                                    .zip(&words)
                                    .filter(|(_, v)| v.is_none())
                                    .map(|(c, _)| *c)
                                    .collect();
                                return Err(GcodeError::UnknownPosition { line: mv.line, missing });
                            }
                        },
                    };
                    let prev = pos.replace(p);

                    let opens_layer = if explicit_layers {
                        std::mem::take(&mut pending_layer)
                    } else {
                        extruding && b.layer_z().is_some_and(|z| p.z > z + DUPLICATE_TOLERANCE)
                    };
                    if (opens_layer && b.extruded) || b.layers.is_empty() {
                        b.new_layer(p.z);
                    }
                    if extruding && !b.extruded {
                        b.set_layer_z(p.z);
                        b.extruded = true;
                    }
                    if prev.is_some_and(|q| (q - p).norm() <= DUPLICATE_TOLERANCE) {
                        continue;
                    }
                    let role = if extruding { feature } else { Role::Travel };
                    b.push(prev, p, role, feed);
                }
            }
        }
        Ok(b.finish())
    }
}

#[derive(Default)]
struct Builder {
    layers: Vec<Layer>,
    current: Option<(Role, Option<f64>, Vec<Point3>)>,
    /// The current layer has at least one extruding move.
    extruded: bool,
}

impl Builder {
    fn layer_z(&self) -> Option<f64> {
        self.layers.last().map(|l| l.z)
    }

    fn set_layer_z(&mut self, z: f64) {
        if let Some(l) = self.layers.last_mut() {
            l.z = z;
        }
    }

    fn flush(&mut self) {
        if let Some((role, feed, pts)) = self.current.take() {
            if let Some(layer) = self.layers.last_mut() {
                layer.paths.push(PathSegment::new(role, pts, feed));
            }
        }
    }

    fn new_layer(&mut self, z: f64) {
        self.flush();
        self.layers.push(Layer { z, paths: Vec::new() });
        self.extruded = false;
    }

    fn push(&mut self, from: Option<Point3>, to: Point3, role: Role, feed: Option<f64>) {
        if let Some((r, f, pts)) = &mut self.current {
            if *r == role && *f == feed {
                pts.push(to);
                return;
            }
        }
        self.flush();
        let mut pts = Vec::with_capacity(2);
        pts.extend(from);
        pts.push(to);
        self.current = Some((role, feed, pts));
    }

    fn finish(mut self) -> Toolpath {
        self.flush();
        Toolpath { units: "mm".into(), layers: self.layers }
    }
}

/// Parse and evaluate in one go.
pub fn gcode_to_toolpath(text: &str) -> Result<Toolpath, GcodeError> {
    parse_gcode(text)?.to_toolpath()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roles(tp: &Toolpath) -> Vec<Role> {
        tp.flatten().iter().map(|p| p.role).collect()
    }

    #[test]
    fn three_point_example() {
        let tp = gcode_to_toolpath("G0 X0 Y0 Z0.2\nG1 X10 Y0 E1\nG1 X10 Y10 E2").unwrap();
        assert_eq!(roles(&tp), vec![Role::Travel, Role::Infill, Role::Infill]);
        assert_eq!(tp.layers.len(), 1);
        assert_eq!(tp.layers[0].z, 0.2);
    }

    #[test]
    fn empty_input() {
        let tp = gcode_to_toolpath("").unwrap();
        assert!(tp.layers.is_empty());
    }

    #[test]
    fn arcs_are_rejected() {
        let err = gcode_to_toolpath("G2 X1 Y1").unwrap_err();
        assert_eq!(err, GcodeError::UnsupportedCommand { line: 1, command: "G2".into() });
    }

    #[test]
    fn malformed_number_has_column() {
        let err = parse_gcode("G1 X1\nG1 X1.2.3 Y0").unwrap_err();
        assert_eq!(err, GcodeError::MalformedNumber { line: 2, column: 5, text: "1.2.3".into() });
    }

    #[test]
    fn relative_extrusion_and_types() {
        let text =
            "M83\nG0 X0 Y0 Z0.3\n;TYPE:WALL-OUTER\nG1 X5 E0.5\nG1 Y5 E0.5\n;TYPE:FILL\nG1 X0 E0.5\nG1 E-1\nG0 X9 Y9";
        let tp = gcode_to_toolpath(text).unwrap();
        let paths = &tp.layers[0].paths;
        assert_eq!(
            paths.iter().map(|p| p.role).collect::<Vec<_>>(),
            vec![Role::Travel, Role::Perimeter, Role::Infill, Role::Travel]
        );
    }

    #[test]
    fn z_increase_starts_a_layer() {
        let text = "G0 X0 Y0 Z0.2\nG1 X1 E1\nG0 Z0.4\nG1 X0 E2";
        let tp = gcode_to_toolpath(text).unwrap();
        assert_eq!(tp.layers.len(), 2);
        assert_eq!(tp.layers[1].z, 0.4);
    }

    #[test]
    fn first_move_must_be_complete_after_homing() {
        let err = gcode_to_toolpath("G28\nG1 X1 Y1").unwrap_err();
        assert!(matches!(err, GcodeError::UnknownPosition { line: 2, .. }));
    }

    #[test]
    fn autodetects_relative_e() {
        let prog = parse_gcode("G1 X1 Y0 Z0 E0.4\nG1 X2 E0.4\nG1 X3 E0.4\nG1 X4 E0.3").unwrap();
        assert_eq!(prog.extrusion_mode(), ExtrusionMode::Relative);
        let prog = parse_gcode("G1 X1 Y0 Z0 E0.4\nG1 X2 E0.8\nG1 X3 E1.2").unwrap();
        assert_eq!(prog.extrusion_mode(), ExtrusionMode::Absolute);
    }
}
