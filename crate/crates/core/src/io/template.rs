use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glass::{Domain, GlassKind, GlassTemplate, MonomialBasis};
use crate::io::{io_error, toml_error};
use crate::phasor::SplitPhasor;

pub const TEMPLATE_FORMAT_VERSION: u32 = 1;

/// Unit system of stored values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSystem {
    #[default]
    PerUnit,
    Si,
}

impl UnitSystem {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitSystem::PerUnit => "per-unit",
            UnitSystem::Si => "si",
        }
    }
}

impl std::str::FromStr for UnitSystem {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per-unit" | "pu" => Ok(UnitSystem::PerUnit),
            "si" => Ok(UnitSystem::Si),
            other => Err(format!("unknown unit system '{other}' (expected per-unit or si)")),
        }
    }
}

/// A template together with the unit system its coefficients assume.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTemplate {
    pub template: GlassTemplate<f64>,
    pub units: UnitSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KindField {
    VoltageDependent,
    CurrentDependent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    e_re: u32,
    e_im: u32,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainField {
    re: [f64; 2],
    im: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TemplateDoc {
    format_version: u32,
    kind: KindField,
    order: u32,
    center: [f64; 2],
    #[serde(default)]
    units: UnitSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainField>,
    real: Vec<Term>,
    imag: Vec<Term>,
}

impl TemplateDoc {
    pub(crate) fn from_stored(s: &StoredTemplate) -> Self {
        let t = &s.template;
        let terms =
            |c: &[f64]| t.basis().exponents().iter().zip(c).map(|(&(e_re, e_im), &value)| Term { e_re, e_im, value }).collect();
        Self {
            format_version: TEMPLATE_FORMAT_VERSION,
            kind: match t.kind() {
                GlassKind::VoltageDependent => KindField::VoltageDependent,
                GlassKind::CurrentDependent => KindField::CurrentDependent,
            },
            order: t.order(),
            center: [t.center().re, t.center().im],
            units: s.units,
            domain: t.domain().map(|d| DomainField { re: [d.re.0, d.re.1], im: [d.im.0, d.im.1] }),
            real: terms(t.coeffs_r()),
            imag: terms(t.coeffs_i()),
        }
    }

    pub(crate) fn into_stored(self, location: &str) -> Result<StoredTemplate> {
        if self.format_version != TEMPLATE_FORMAT_VERSION {
            return Err(Error::format(
                format!("{location}format_version"),
                format!("unsupported template format version {} (expected {TEMPLATE_FORMAT_VERSION})", self.format_version),
            ));
        }
        let basis = MonomialBasis::new(self.order).map_err(|e| Error::format(format!("{location}order"), e.to_string()))?;
        let place = |terms: &[Term], name: &str| -> Result<Vec<f64>> {
            if terms.len() != basis.len() {
                return Err(Error::format(
                    format!("{location}{name}"),
                    format!("{} coefficients listed, order {} needs {}", terms.len(), self.order, basis.len()),
                ));
            }
            let mut out = vec![None; basis.len()];
            for (k, term) in terms.iter().enumerate() {
                let idx = basis.index_of(term.e_re, term.e_im).ok_or_else(|| {
                    Error::format(
                        format!("{location}{name}[{k}]"),
                        format!("monomial ({}, {}) exceeds order {}", term.e_re, term.e_im, self.order),
                    )
                })?;
                if out[idx].replace(term.value).is_some() {
                    return Err(Error::format(
                        format!("{location}{name}[{k}]"),
                        format!("monomial ({}, {}) listed twice", term.e_re, term.e_im),
                    ));
                }
            }
            Ok(out.into_iter().map(|v| v.expect("all monomials present")).collect())
        };
        let cr = place(&self.real, "real")?;
        let ci = place(&self.imag, "imag")?;
        let kind = match self.kind {
            KindField::VoltageDependent => GlassKind::VoltageDependent,
            KindField::CurrentDependent => GlassKind::CurrentDependent,
        };
        let template = GlassTemplate::new(kind, self.order, SplitPhasor::new(self.center[0], self.center[1]), cr, ci)
            .map_err(|e| Error::format(location.trim_end_matches('.'), e.to_string()))?
            .with_domain(self.domain.map(|d| Domain { re: (d.re[0], d.re[1]), im: (d.im[0], d.im[1]) }));
        Ok(StoredTemplate { template, units: self.units })
    }
}

pub fn render_template(t: &StoredTemplate) -> String {
    toml::to_string(&TemplateDoc::from_stored(t)).expect("template document serializes")
}

pub fn parse_template(text: &str) -> Result<StoredTemplate> {
    let doc: TemplateDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    doc.into_stored("")
}

pub fn save_template(t: &StoredTemplate, path: &Path) -> Result<()> {
    std::fs::write(path, render_template(t)).map_err(|e| io_error(path, e))
}

pub fn load_template(path: &Path) -> Result<StoredTemplate> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_template(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_template() -> StoredTemplate {
        StoredTemplate {
            template: GlassTemplate::new(
                GlassKind::VoltageDependent,
                1,
                SplitPhasor::zero(),
                vec![0.0932, -8.86e-4, 0.0014],
                vec![-0.170, -0.0012, -0.0035],
            )
            .unwrap(),
            units: UnitSystem::PerUnit,
        }
    }

    #[test]
    fn reference_file_lists_labeled_coefficients() {
        let text = render_template(&reference_template());
        assert_eq!(text.matches("[[real]]").count(), 3);
        assert_eq!(text.matches("[[imag]]").count(), 3);
        assert!(text.contains("e_re = 1"));
        assert_eq!(parse_template(&text).unwrap(), reference_template());
    }

    #[test]
    fn terms_may_be_listed_in_any_order() {
        let text = r#"
format_version = 1
kind = "voltage-dependent"
order = 1
center = [0.0, 0.0]
[[real]]
e_re = 0
e_im = 1
value = 0.0014
[[real]]
e_re = 1
e_im = 0
value = -8.86e-4
[[real]]
e_re = 0
e_im = 0
value = 0.0932
[[imag]]
e_re = 0
e_im = 0
value = -0.170
[[imag]]
e_re = 1
e_im = 0
value = -0.0012
[[imag]]
e_re = 0
e_im = 1
value = -0.0035
"#;
        assert_eq!(parse_template(text).unwrap(), reference_template());
    }

    #[test]
    fn mismatched_counts_and_versions_fail() {
        let good = render_template(&reference_template());
        let bad_order = good.replace("order = 1", "order = 2");
        assert!(matches!(parse_template(&bad_order), Err(Error::Format { .. })));
        let bad_version = good.replace("format_version = 1", "format_version = 9");
        match parse_template(&bad_version) {
            Err(Error::Format { location, .. }) => assert_eq!(location, "format_version"),
            other => panic!("{other:?}"),
        }
        assert!(parse_template("kind = 3").is_err());
    }
}
