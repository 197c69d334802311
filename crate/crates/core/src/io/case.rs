use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::devices::{ExpLoad, IMParams, InductionMotor, PQLoad, PVBus, SlackSource, ZIPLoad};
use crate::error::{Error, Result};
use crate::fitting::PhysicsModel;
use crate::io::template::{StoredTemplate, TemplateDoc, UnitSystem};
use crate::io::{io_error, load_template, toml_error};
use crate::network::{Device, NetworkCase, PowerBase, UnitScale};
use crate::phasor::SplitPhasor;

pub const CASE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    format_version: u32,
    #[serde(default)]
    base: Option<BaseDoc>,
    #[serde(default)]
    bus: Vec<BusDoc>,
    #[serde(default)]
    branch: Vec<BranchDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseDoc {
    #[serde(default)]
    units: UnitSystem,
    #[serde(default = "one")]
    s_base: f64,
    #[serde(default = "one")]
    v_base: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct BusDoc {
    id: i64,
    #[serde(flatten)]
    device: DeviceDoc,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub(crate) enum DeviceDoc {
    Slack {
        v_re: f64,
        #[serde(default)]
        v_im: f64,
    },
    Pq {
        p: f64,
        q: f64,
    },
    Pv {
        p: f64,
        v_mag: f64,
    },
    Zip {
        p0: f64,
        q0: f64,
        a_p: f64,
        b_p: f64,
        c_p: f64,
        a_q: f64,
        b_q: f64,
        c_q: f64,
    },
    Exp {
        p0: f64,
        q0: f64,
        p_v: f64,
        q_v: f64,
    },
    Im {
        r_s: f64,
        x_s: f64,
        x_m: f64,
        r_r: f64,
        poles: u32,
        omega_s: f64,
        #[serde(default)]
        torque: Option<f64>,
    },
    Glass {
        #[serde(default)]
        template_file: Option<PathBuf>,
        #[serde(default)]
        template: Option<TemplateDoc>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    from: i64,
    to: i64,
    r: f64,
    x: f64,
    #[serde(default)]
    b_sh: f64,
}

fn at(location: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Format { .. } | Error::Io { .. } => e,
        other => Error::format(location, other.to_string()),
    }
}

impl DeviceDoc {
    fn glass_template(&self, base_dir: Option<&Path>, location: &str) -> Result<StoredTemplate> {
        let DeviceDoc::Glass { template_file, template } = self else { unreachable!("only called for glass devices") };
        match (template_file, template) {
            (Some(_), Some(_)) => Err(Error::format(location, "give either template_file or template, not both")),
            (None, None) => Err(Error::format(location, "glass device needs template_file or template")),
            (None, Some(doc)) => doc.clone().into_stored(&format!("{location}.template.")),
            (Some(file), None) => {
                let path = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                load_template(&path).map_err(|e| match e {
                    Error::Format { location: inner, message } => Error::format(format!("{}: {inner}", path.display()), message),
                    other => other,
                })
            }
        }
    }

    /// Turn the document into a network device. Powers, voltages and
    /// impedances are divided by the bases when the case is in SI.
    fn into_device(
        self,
        units: UnitSystem,
        base: &PowerBase<f64>,
        base_dir: Option<&Path>,
        location: &str,
    ) -> Result<Device<f64>> {
        let (sb, vb) = match units {
            UnitSystem::PerUnit => (1.0, 1.0),
            UnitSystem::Si => (base.s_base, base.v_base),
        };
        let err = at(location);
        let device = match self {
            DeviceDoc::Slack { v_re, v_im } => {
                Device::Slack(SlackSource::new(SplitPhasor::new(v_re / vb, v_im / vb)).map_err(&err)?)
            }
            DeviceDoc::Pq { p, q } => Device::Pq(PQLoad::new(p / sb, q / sb).map_err(&err)?),
            DeviceDoc::Pv { p, v_mag } => Device::Pv(PVBus::new(p / sb, v_mag / vb).map_err(&err)?),
            DeviceDoc::Zip { p0, q0, a_p, b_p, c_p, a_q, b_q, c_q } => {
                Device::Zip(ZIPLoad::new(p0 / sb, q0 / sb, a_p, b_p, c_p, a_q, b_q, c_q).map_err(&err)?)
            }
            DeviceDoc::Exp { p0, q0, p_v, q_v } => Device::Exp(ExpLoad::new(p0 / sb, q0 / sb, p_v, q_v).map_err(&err)?),
            DeviceDoc::Im { r_s, x_s, x_m, r_r, poles, omega_s, torque } => {
                let torque =
                    torque.ok_or_else(|| Error::format(format!("{location}.torque"), "induction motor needs a load torque"))?;
                let params = IMParams::new(r_s, x_s, x_m, r_r, poles, omega_s).map_err(&err)?;
                Device::InductionMotor {
                    motor: InductionMotor::new(params, torque).map_err(&err)?,
                    scale: UnitScale::from_base(base),
                }
            }
            ref glass @ DeviceDoc::Glass { .. } => {
                let stored = glass.glass_template(base_dir, location)?;
                let scale = match stored.units {
                    UnitSystem::PerUnit => UnitScale::identity(),
                    UnitSystem::Si => UnitScale::from_base(base),
                };
                Device::Glass { template: stored.template, scale }
            }
        };
        Ok(device)
    }
}

/// Parse a case document. Relative template paths resolve against `base_dir`.
pub fn parse_case(text: &str, base_dir: Option<&Path>) -> Result<NetworkCase<f64>> {
    let doc: CaseDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    if doc.format_version != CASE_FORMAT_VERSION {
        return Err(Error::format(
            "format_version",
            format!("unsupported case format version {} (expected {CASE_FORMAT_VERSION})", doc.format_version),
        ));
    }
    let (units, base) = match &doc.base {
        Some(b) => (b.units, PowerBase { s_base: b.s_base, v_base: b.v_base }),
        None => (UnitSystem::PerUnit, PowerBase::default()),
    };
    if !(base.s_base > 0.0 && base.s_base.is_finite() && base.v_base > 0.0 && base.v_base.is_finite()) {
        return Err(Error::format("base", "s_base and v_base must be positive and finite"));
    }
    if units == UnitSystem::Si && doc.base.is_none() {
        return Err(Error::format("base", "an SI case must declare its bases"));
    }

    let mut case = NetworkCase::new(base);
    let mut seen = HashMap::new();
    for (k, bus) in doc.bus.into_iter().enumerate() {
        let location = format!("bus[{k}]");
        if let Some(first) = seen.insert(bus.id, k) {
            return Err(Error::format(
                format!("{location}.id"),
                format!("duplicate bus id {} (first used by bus[{first}])", bus.id),
            ));
        }
        let device = bus.device.into_device(units, &base, base_dir, &location)?;
        case.add_bus(bus.id, Some(device));
    }
    let slacks = case.slack_buses().len();
    if slacks != 1 {
        return Err(Error::SlackCount { found: slacks });
    }

    let z_base = match units {
        UnitSystem::PerUnit => 1.0,
        UnitSystem::Si => base.z_base(),
    };
    for (k, br) in doc.branch.into_iter().enumerate() {
        let location = format!("branch[{k}]");
        let end = |id: i64, field: &str| {
            case.node_of(id).ok_or_else(|| Error::format(format!("{location}.{field}"), format!("bus {id} does not exist")))
        };
        let (from, to) = (end(br.from, "from")?, end(br.to, "to")?);
        case.add_branch(from, to, br.r / z_base, br.x / z_base, br.b_sh * z_base).map_err(at(&location))?;
    }
    case.validate()?;
    Ok(case)
}

pub fn load_case(path: &Path) -> Result<NetworkCase<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_case(&text, path.parent())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format_version: u32,
    model: DeviceDoc,
}

/// A device description for measurement synthesis, in the device's own units.
pub struct ModelSpec {
    pub type_tag: &'static str,
    pub model: Box<dyn PhysicsModel<f64>>,
    /// Torque given in the file, used as the default sweep tag.
    pub default_tag: Option<f64>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec").field("type_tag", &self.type_tag).field("default_tag", &self.default_tag).finish()
    }
}

/// Parse a synthesis model file: `format_version = 1` plus a `[model]`
/// table using the same keys as a case bus.
pub fn parse_model(text: &str, base_dir: Option<&Path>) -> Result<ModelSpec> {
    let doc: ModelDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    if doc.format_version != CASE_FORMAT_VERSION {
        return Err(Error::format(
            "format_version",
            format!("unsupported model format version {} (expected {CASE_FORMAT_VERSION})", doc.format_version),
        ));
    }
    let err = at("model");
    let spec = match doc.model {
        DeviceDoc::Pq { p, q } => {
            ModelSpec { type_tag: "pq", model: Box::new(PQLoad::new(p, q).map_err(&err)?), default_tag: None }
        }
        DeviceDoc::Zip { p0, q0, a_p, b_p, c_p, a_q, b_q, c_q } => ModelSpec {
            type_tag: "zip",
            model: Box::new(ZIPLoad::new(p0, q0, a_p, b_p, c_p, a_q, b_q, c_q).map_err(&err)?),
            default_tag: None,
        },
        DeviceDoc::Exp { p0, q0, p_v, q_v } => {
            ModelSpec { type_tag: "exp", model: Box::new(ExpLoad::new(p0, q0, p_v, q_v).map_err(&err)?), default_tag: None }
        }
        DeviceDoc::Im { r_s, x_s, x_m, r_r, poles, omega_s, torque } => ModelSpec {
            type_tag: "im",
            model: Box::new(IMParams::new(r_s, x_s, x_m, r_r, poles, omega_s).map_err(&err)?),
            default_tag: torque,
        },
        ref glass @ DeviceDoc::Glass { .. } => {
            ModelSpec { type_tag: "glass", model: Box::new(glass.glass_template(base_dir, "model")?.template), default_tag: None }
        }
        DeviceDoc::Slack { .. } | DeviceDoc::Pv { .. } => {
            return Err(Error::format("model.type", "slack and pv buses are not measurable devices"));
        }
    };
    Ok(spec)
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_model(&text, path.parent())
}
