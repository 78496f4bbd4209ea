use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cover::{check_same_space, Cover};
use super::map::CellMap;
use super::space::{CellSpace, Permutation};
use super::Cell;
use crate::{Error, Result};

/// Current version of the bundle document.
pub const BUNDLE_VERSION: u32 = 1;

/// A space together with a cover and a map on it.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub cover: Cover,
    pub map: CellMap,
}

impl Bundle {
    pub fn new(cover: Cover, map: CellMap) -> Result<Self> {
        check_same_space(cover.space(), map.space())?;
        Ok(Self { cover, map })
    }

    pub fn space(&self) -> &Arc<CellSpace> {
        self.cover.space()
    }

    /// Cells, adjacency, cover elements and maps side by side; cells of
    /// `other` are shifted past those of `self`.
    pub fn disjoint_union(&self, other: &Bundle) -> Result<Bundle> {
        let space = Arc::new(self.space().disjoint_union(other.space())?);
        let shift = self.space().len();
        let left = self.cover.elements().map(|e| e.iter().map(|&c| c as usize).collect::<Vec<_>>());
        let right = other
            .cover
            .elements()
            .map(|e| e.iter().map(|&c| c as usize + shift).collect::<Vec<_>>());
        let cover = Cover::new(&space, left.chain(right))?;
        let map = self.map.disjoint_union_onto(&other.map, &space)?;
        Ok(Bundle { cover, map })
    }

    pub fn relabel(&self, perm: &Permutation) -> Result<Bundle> {
        let space = Arc::new(self.space().relabel(perm)?);
        Ok(Bundle {
            cover: self.cover.relabel_onto(&space, perm)?,
            map: self.map.relabel_onto(&space, perm)?,
        })
    }

    pub fn to_doc(&self) -> BundleDoc {
        let space = self.space();
        let map = (0..space.len() as Cell)
            .map(|c| (c.to_string(), self.map.images(c).map(|t| t as usize).collect()))
            .collect();
        BundleDoc {
            version: BUNDLE_VERSION,
            cells: space.len(),
            adjacency: space.edges().map(|(a, b)| [a as usize, b as usize]).collect(),
            dimension: space.dimension(),
            cover: self
                .cover
                .elements()
                .map(|e| e.iter().map(|&c| c as usize).collect())
                .collect(),
            map: Some(map),
            invertible: self.map.is_invertible(),
        }
    }

    pub fn from_json(text: &str) -> Result<Bundle> {
        let doc: BundleDoc =
            serde_json::from_str(text).map_err(|e| Error::Structural(format!("bundle JSON: {e}")))?;
        doc.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("bundle documents serialise")
    }
}

/// Serialised form of a [`Bundle`]. A missing `map` means the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub cells: usize,
    #[serde(default)]
    pub adjacency: Vec<[usize; 2]>,
    #[serde(default)]
    pub dimension: usize,
    pub cover: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default)]
    pub invertible: bool,
}

fn default_version() -> u32 {
    BUNDLE_VERSION
}

impl BundleDoc {
    pub fn build(&self) -> Result<Bundle> {
        if self.version != BUNDLE_VERSION {
            return Err(Error::Structural(format!("unsupported bundle version {}", self.version)));
        }
        let edges: Vec<(usize, usize)> = self.adjacency.iter().map(|&[a, b]| (a, b)).collect();
        let space = Arc::new(CellSpace::new(self.cells, &edges, self.dimension)?);
        let cover = Cover::new(&space, self.cover.iter().map(|e| e.iter().copied()))?;
        let map = match &self.map {
            None => CellMap::identity(&space),
            Some(m) => {
                let mut images: Vec<Option<Vec<usize>>> = vec![None; self.cells];
                for (key, img) in m {
                    let c: usize = key
                        .parse()
                        .map_err(|_| Error::Structural(format!("map key {key:?} is not a cell index")))?;
                    if c >= self.cells {
                        return Err(Error::Structural(format!("map key {c} outside 0..{}", self.cells)));
                    }
                    images[c] = Some(img.clone());
                }
                let images = images
                    .into_iter()
                    .enumerate()
                    .map(|(c, i)| i.ok_or_else(|| Error::Structural(format!("map omits cell {c}"))))
                    .collect::<Result<Vec<_>>>()?;
                CellMap::new(&space, images, self.invertible)?
            }
        };
        Ok(Bundle { cover, map })
    }
}
