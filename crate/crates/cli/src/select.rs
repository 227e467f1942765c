//! Parsing of `--scorer`, `--predictor`, `--oracle` and `--camera` values.

use std::str::FromStr;

use scenecomp::layout::LandscapeKind;

/// `mock:<landscape>` or `remote:<url>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Mock(LandscapeKind),
    Remote(String),
}

impl FromStr for ScorerSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("mock", kind)) => kind.parse().map(ScorerSpec::Mock).map_err(|_| {
                format!("unknown mock scorer `{kind}` (expected multi-bump, overlap-penalty or plateau-spike)")
            }),
            Some(("remote", url)) if !url.is_empty() => Ok(ScorerSpec::Remote(url.into())),
            _ => Err(format!("scorer `{s}` must be mock:<kind> or remote:<url>")),
        }
    }
}

/// `mock` or `remote:<url>`; used for predictors and disparity oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Mock,
    Remote(String),
}

impl FromStr for ModelSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "mock" => Ok(ModelSpec::Mock),
            Some(("remote", url)) if !url.is_empty() => Ok(ModelSpec::Remote(url.into())),
            _ => Err(format!("`{s}` must be mock or remote:<url>")),
        }
    }
}

/// Similarity used by `evaluate`: `mock:perfect` scores 1 for an image's own
/// prompt and 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalScorerSpec {
    Perfect,
    Remote(String),
}

impl FromStr for EvalScorerSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("mock", "perfect")) => Ok(EvalScorerSpec::Perfect),
            Some(("remote", url)) if !url.is_empty() => Ok(EvalScorerSpec::Remote(url.into())),
            _ => Err(format!("scorer `{s}` must be mock:perfect or remote:<url>")),
        }
    }
}

/// `pano[:<height>]` or
/// `perspective:<azimuth°>,<elevation°>[,<distance>[,<fov°>[,<W>x<H>]]]`.
#[derive(Debug, Clone, PartialEq)]
pub enum CameraSpec {
    Pano {
        height: usize,
    },
    Perspective {
        azimuth_deg: f64,
        elevation_deg: f64,
        /// Defaults to the scene radius.
        distance: Option<f64>,
        fov_deg: f64,
        width: usize,
        height: usize,
    },
}

pub const DEFAULT_PANO_HEIGHT: usize = 256;
pub const DEFAULT_VIEW_SIZE: usize = 256;

impl FromStr for CameraSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "pano" => {
                let height = if args.is_empty() {
                    DEFAULT_PANO_HEIGHT
                } else {
                    args.parse().map_err(|_| format!("bad panorama height `{args}`"))?
                };
                if height == 0 {
                    return Err("panorama height must be positive".into());
                }
                Ok(CameraSpec::Pano { height })
            }
            "perspective" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() < 2 || parts.len() > 5 {
                    return Err("perspective camera needs azimuth,elevation[,distance[,fov[,WxH]]]".into());
                }
                let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}` in camera spec"));
                let (width, height) = match parts.get(4) {
                    Some(size) => {
                        let (w, h) = size.split_once('x').ok_or_else(|| format!("bad size `{size}`, expected WxH"))?;
                        let p = |t: &str| t.parse::<usize>().map_err(|_| format!("bad size `{size}`"));
                        (p(w)?, p(h)?)
                    }
                    None => (DEFAULT_VIEW_SIZE, DEFAULT_VIEW_SIZE),
                };
                Ok(CameraSpec::Perspective {
                    azimuth_deg: num(parts[0])?,
                    elevation_deg: num(parts[1])?,
                    distance: parts.get(2).map(|t| num(t)).transpose()?,
                    fov_deg: parts.get(3).map(|t| num(t)).transpose()?.unwrap_or(60.0),
                    width,
                    height,
                })
            }
            _ => Err(format!("camera `{s}` must start with pano or perspective")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_selections() {
        assert_eq!("mock:multi-bump".parse::<ScorerSpec>().unwrap(), ScorerSpec::Mock(LandscapeKind::MultiBump));
        assert_eq!(
            "remote:http://h:1".parse::<ScorerSpec>().unwrap(),
            ScorerSpec::Remote("http://h:1".into())
        );
        assert!("mock:nope".parse::<ScorerSpec>().is_err());
        assert_eq!("mock".parse::<ModelSpec>().unwrap(), ModelSpec::Mock);
        assert!("remote:".parse::<ModelSpec>().is_err());
        assert_eq!("mock:perfect".parse::<EvalScorerSpec>().unwrap(), EvalScorerSpec::Perfect);
    }

    #[test]
    fn parses_cameras() {
        assert_eq!("pano".parse::<CameraSpec>().unwrap(), CameraSpec::Pano { height: 256 });
        assert_eq!("pano:32".parse::<CameraSpec>().unwrap(), CameraSpec::Pano { height: 32 });
        match "perspective:30,20,3.5,45,64x48".parse::<CameraSpec>().unwrap() {
            CameraSpec::Perspective {
                distance, fov_deg, width, height, ..
            } => assert_eq!((distance, fov_deg, width, height), (Some(3.5), 45.0, 64, 48)),
            _ => unreachable!(),
        }
        assert!("perspective:30".parse::<CameraSpec>().is_err());
        assert!("ortho".parse::<CameraSpec>().is_err());
    }
}
