//! Concentric "garden" layout: a central park wrapped by rings of buildings,
//! each ring separated from the next by a one-block street ring.
//!
//! Within a ring, buildings are tiled along each side with a one-block street
//! gap between neighbours; ring corners stay street. Doors face the street
//! ring just inside the building ring, so every street ring is reachable from
//! the next through the gaps and corners.

use serde::{Deserialize, Serialize};

use crate::city::{BuildingSpec, BuildingType, City, Footprint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub building_type: BuildingType,
    /// Building extent perpendicular to the ring (ring thickness), blocks.
    pub depth: i32,
    /// Building extent along the ring, blocks.
    pub length: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardenSpec {
    pub width: i32,
    pub height: i32,
    /// Side of the square central park; 0 for no park.
    pub park_size: i32,
    /// Rings from the centre outwards.
    pub rings: Vec<RingSpec>,
}

impl Default for GardenSpec {
    fn default() -> Self {
        GardenSpec {
            width: 22,
            height: 22,
            park_size: 4,
            rings: vec![
                RingSpec { building_type: BuildingType::Home, depth: 2, length: 2 },
                RingSpec { building_type: BuildingType::Retail, depth: 2, length: 2 },
                RingSpec { building_type: BuildingType::Work, depth: 2, length: 3 },
            ],
        }
    }
}

impl GardenSpec {
    /// Side of the square the layout occupies.
    pub fn extent(&self) -> i32 {
        self.park_size + 2 * self.rings.iter().map(|r| 1 + r.depth).sum::<i32>()
    }
}

pub fn generate_garden_layout(spec: &GardenSpec) -> Result<City> {
    if spec.park_size < 0 {
        return Err(Error::invalid("park size must be non-negative"));
    }
    if spec.rings.iter().any(|r| r.depth < 1 || r.length < 1) {
        return Err(Error::invalid("ring depth and length must be positive"));
    }
    let extent = spec.extent();
    if extent > spec.width || extent > spec.height {
        return Err(Error::invalid(format!(
            "rings need a {extent}x{extent} area but the grid is {}x{}",
            spec.width, spec.height
        )));
    }
    let mut city = City::new(spec.width, spec.height)?;
    let ox = (spec.width - extent) / 2;
    let oy = (spec.height - extent) / 2;

    // Inner square [x0, x1) x [y0, y1): everything laid out so far,
    // including the street ring around it.
    let p = spec.park_size;
    let (mut x0, mut y0) = (ox + (extent - p) / 2, oy + (extent - p) / 2);
    let (mut x1, mut y1) = (x0 + p, y0 + p);
    if p > 0 {
        city.add_building(BuildingSpec::new(
            BuildingType::Park,
            (x1, y0 + p / 2),
            Footprint::bbox(x0, y0, x1, y1),
        ))?;
    }

    for ring in &spec.rings {
        // Street ring.
        x0 -= 1;
        y0 -= 1;
        x1 += 1;
        y1 += 1;
        let (ix0, iy0, ix1, iy1) = (x0, y0, x1, y1);
        let d = ring.depth;
        let (ox0, oy0, ox1, oy1) = (ix0 - d, iy0 - d, ix1 + d, iy1 + d);

        // Bottom and top sides run along x; left and right along y. The
        // first column/row of every side and the last row of the vertical
        // sides stay street so the band corners reach the street ring.
        let mut p = ix0 + 1;
        while p + ring.length <= ix1 {
            let mid = p + ring.length / 2;
            city.add_building(BuildingSpec::new(
                ring.building_type,
                (mid, iy0),
                Footprint::bbox(p, oy0, p + ring.length, iy0),
            ))?;
            city.add_building(BuildingSpec::new(
                ring.building_type,
                (mid, iy1 - 1),
                Footprint::bbox(p, iy1, p + ring.length, oy1),
            ))?;
            p += ring.length + 1;
        }
        let mut p = iy0 + 1;
        while p + ring.length < iy1 {
            let mid = p + ring.length / 2;
            city.add_building(BuildingSpec::new(
                ring.building_type,
                (ix0, mid),
                Footprint::bbox(ox0, p, ix0, p + ring.length),
            ))?;
            city.add_building(BuildingSpec::new(
                ring.building_type,
                (ix1 - 1, mid),
                Footprint::bbox(ix1, p, ox1, p + ring.length),
            ))?;
            p += ring.length + 1;
        }
        x0 = ox0;
        y0 = oy0;
        x1 = ox1;
        y1 = oy1;
    }
    Ok(city)
}
