//! External names for variables and constraints. Names are pure functions of
//! tags so that exported files diff cleanly between runs.

use crate::instance::Instance;

use super::{Origin, Subject, VarTag};

fn kind_code(instance: &Instance, kind: usize) -> usize {
    instance.kinds()[kind].code()
}

pub fn subject_suffix(instance: &Instance, subject: &Subject) -> String {
    match *subject {
        Subject::Ta(s) => format!("s{s}"),
        Subject::Course(c) => format!("c{c}"),
        Subject::Pair(s, c) => format!("s{s}_c{c}"),
        Subject::Task(c, k) => format!("c{c}_t{}", kind_code(instance, k)),
        Subject::Cell(s, c, k) => format!("s{s}_c{c}_t{}", kind_code(instance, k)),
    }
}

pub fn x_name(ta: usize, course: usize, kind_code: usize) -> String {
    format!("x_s{ta}_c{course}_t{kind_code}")
}

pub fn var_name(instance: &Instance, tag: &VarTag) -> String {
    match *tag {
        VarTag::X { ta, course, kind } => x_name(ta, course, kind_code(instance, kind)),
        VarTag::Y { ta, course, kind } => format!("y_s{ta}_c{course}_t{}", kind_code(instance, kind)),
        VarTag::W { ta, course } => format!("w_s{ta}_c{course}"),
        VarTag::H { ta } => format!("h_s{ta}"),
        VarTag::N { course, kind } => format!("n_c{course}_t{}", kind_code(instance, kind)),
        VarTag::Z { ta } => format!("z_s{ta}"),
        VarTag::Soft { family, subject } => {
            let prefix = match instance.weights().penalty_mode {
                crate::instance::PenaltyMode::Indicator => "viol",
                crate::instance::PenaltyMode::Magnitude => "excess",
            };
            format!("{prefix}_eq{}_{}", family.equation(), subject_suffix(instance, &subject))
        }
    }
}

pub fn origin_name(instance: &Instance, origin: &Origin) -> String {
    let mut name = format!("{}_{}", origin.tag, subject_suffix(instance, &origin.subject));
    if let Some(part) = origin.part {
        name.push('_');
        name.push_str(part);
    }
    name
}

/// Parses an `x_s<i>_c<j>_t<k>` name into `(ta, course, kind_code)`.
pub fn parse_x_name(name: &str) -> Option<(usize, usize, usize)> {
    let rest = name.strip_prefix("x_s")?;
    let (s, rest) = rest.split_once("_c")?;
    let (c, t) = rest.split_once("_t")?;
    Some((s.parse().ok()?, c.parse().ok()?, t.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_names_parse_back() {
        assert_eq!(x_name(3, 14, 9), "x_s3_c14_t9");
        assert_eq!(parse_x_name("x_s3_c14_t9"), Some((3, 14, 9)));
        assert_eq!(parse_x_name("y_s3_c14_t9"), None);
        assert_eq!(parse_x_name("x_s3_c14"), None);
    }
}
