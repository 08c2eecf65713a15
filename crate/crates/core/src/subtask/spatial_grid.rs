//! Visual spatial grids: count cells of one kind on a ray from a reference
//! cell.

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{Canvas, NamedColor, Paint, PlacedShape, Scene, ShapeStyle, DEFAULT_CANVAS};
use crate::svg::{render_tiles, SvgDoc};
use crate::task::{
    param_i64, param_text, Answer, Direction, GridCell, GridMatrix, GridQuestion, GridShape,
    InstanceRecord, ParamMap, ParamValue, Subtask,
};
use crate::TaskInstance;

pub const TILE_COLUMNS: usize = 3;
/// Shape circumradius as a fraction of the cell side.
const SHAPE_FRACTION: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub rows: usize,
    pub columns: usize,
    pub number_of_grids: usize,
}

/// Parses `RxC`.
pub fn parse_dimension(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("grid_dimension must look like 3x6, got {s:?}"));
    let (r, c) = s.split_once('x').ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 || r * c < 2 || r > 32 || c > 32 {
        return Err(bad());
    }
    Ok((r, c))
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let (rows, columns) = parse_dimension(param_text(m, "grid_dimension")?)?;
        let g = param_i64(m, "number_of_grids")?;
        if !(1..=9).contains(&g) {
            return Err(Error::invalid(format!("number_of_grids must be in 1..=9, got {g}")));
        }
        Ok(Self {
            rows,
            columns,
            number_of_grids: g as usize,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert(
            "grid_dimension".into(),
            ParamValue::Text(format!("{}x{}", self.rows, self.columns)),
        );
        m.insert("number_of_grids".into(), ParamValue::Int(self.number_of_grids as i64));
        m
    }
}

/// Cells strictly beyond `from` in `dir`, nearest first.
pub fn ray(grid: &GridMatrix, from: (usize, usize), dir: Direction) -> Vec<(usize, usize)> {
    let (dr, dc) = dir.step();
    let (rows, cols) = (grid.len() as i64, grid[0].len() as i64);
    let mut out = Vec::new();
    let (mut r, mut c) = (from.0 as i64 + dr, from.1 as i64 + dc);
    while (0..rows).contains(&r) && (0..cols).contains(&c) {
        out.push((r as usize, c as usize));
        r += dr;
        c += dc;
    }
    out
}

pub fn count_on_ray(grid: &GridMatrix, q: &GridQuestion) -> usize {
    ray(grid, q.reference, q.direction)
        .into_iter()
        .filter(|&(r, c)| grid[r][c] == q.target)
        .count()
}

fn cell_words(cell: GridCell, plural: bool) -> String {
    let fill = if cell.solid { "solid" } else { "outlined" };
    let noun = if plural { cell.shape.plural() } else { cell.shape.name() };
    format!("{fill} {noun}")
}

fn direction_words(d: Direction) -> (&'static str, &'static str) {
    match d {
        Direction::Above => ("above", "column"),
        Direction::Below => ("below", "column"),
        Direction::LeftOf => ("to the left of", "row"),
        Direction::RightOf => ("to the right of", "row"),
    }
}

pub fn question_text(grids: &[GridMatrix], q: &GridQuestion) -> Result<String> {
    let reference = grids[q.grid][q.reference.0][q.reference.1];
    let (dir, line) = direction_words(q.direction);
    prompts::question(
        Subtask::SpatialGrid,
        &[
            ("grid", &(q.grid + 1).to_string()),
            ("reference", &cell_words(reference, false)),
            ("row", &(q.reference.0 + 1).to_string()),
            ("column", &(q.reference.1 + 1).to_string()),
            ("target", &cell_words(q.target, true)),
            ("direction", dir),
            ("line", line),
        ],
    )
}

fn random_cell(rng: &mut SplitMix64) -> GridCell {
    GridCell {
        shape: *rng.choose(&GridShape::ALL),
        solid: rng.bernoulli(0.5),
    }
}

/// Draws one grid into the standard canvas.
pub fn grid_scene(grid: &GridMatrix) -> Result<Scene> {
    let canvas: Canvas = DEFAULT_CANVAS;
    let rows = grid.len();
    let cols = grid[0].len();
    let side = (canvas.width - 2.0 * canvas.margin) / rows.max(cols) as f64;
    let left = (canvas.width - cols as f64 * side) / 2.0;
    let top = (canvas.height - rows as f64 * side) / 2.0;
    let border = ShapeStyle {
        fill: Paint::None,
        stroke: Paint::Named(NamedColor::Gray),
        stroke_width: 1.0,
    };
    let mut scene = Scene::empty(canvas);
    for (r, row) in grid.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let center = Point::new(left + (c as f64 + 0.5) * side, top + (r as f64 + 0.5) * side);
            scene.shapes.push(PlacedShape::new(
                geometry::rectangle(center, side, side, 0.0)?,
                border,
            ));
            let radius = SHAPE_FRACTION * side;
            let poly = match cell.shape {
                GridShape::Circle => geometry::circle(center, radius)?,
                GridShape::Square => geometry::regular_polygon(4, center, radius, 45.0)?,
                GridShape::Triangle => geometry::regular_polygon(3, center, radius, 0.0)?,
            };
            let style = if cell.solid {
                ShapeStyle::solid(NamedColor::Black)
            } else {
                ShapeStyle::outline()
            };
            scene.shapes.push(PlacedShape::new(poly, style));
        }
    }
    Ok(scene)
}

pub fn render_grids(grids: &[GridMatrix]) -> Result<SvgDoc> {
    let scenes = grids.iter().map(grid_scene).collect::<Result<Vec<_>>>()?;
    let tiles: Vec<(String, &Scene)> = scenes
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("Grid {}", i + 1), s))
        .collect();
    render_tiles(&tiles, TILE_COLUMNS)
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    let root = SplitMix64::new(seed);
    let mut rng = root.child(0);
    let grids: Vec<GridMatrix> = (0..p.number_of_grids)
        .map(|g| {
            let mut cells = root.child(1 + g as u64);
            (0..p.rows)
                .map(|_| (0..p.columns).map(|_| random_cell(&mut cells)).collect())
                .collect()
        })
        .collect();
    let grid = rng.below(p.number_of_grids as u64) as usize;
    let (reference, direction) = loop {
        let reference = (
            rng.below(p.rows as u64) as usize,
            rng.below(p.columns as u64) as usize,
        );
        let direction = *rng.choose(&Direction::ALL);
        if !ray(&grids[grid], reference, direction).is_empty() {
            break (reference, direction);
        }
    };
    let question = GridQuestion {
        grid,
        reference,
        direction,
        target: random_cell(&mut rng),
    };
    grid_instance(grids, question, p.to_map(), seed)
}

/// Builds an instance from explicit grids and question.
pub fn grid_instance(
    grids: Vec<GridMatrix>,
    question: GridQuestion,
    params: ParamMap,
    seed: u64,
) -> Result<TaskInstance> {
    let count = count_on_ray(&grids[question.grid], &question);
    let text = question_text(&grids, &question)?;
    let image = render_grids(&grids)?;
    Ok(super::assemble(
        Subtask::SpatialGrid,
        params,
        seed,
        vec![image],
        text,
        Answer::Integer(count as u64),
        InstanceRecord::Grid { grids, question },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_grid(shape: GridShape, rows: usize, cols: usize) -> GridMatrix {
        vec![vec![GridCell { shape, solid: true }; cols]; rows]
    }

    #[test]
    fn all_triangles_no_circles() {
        let grid = uniform_grid(GridShape::Triangle, 3, 3);
        let q = GridQuestion {
            grid: 0,
            reference: (2, 1),
            direction: Direction::Above,
            target: GridCell {
                shape: GridShape::Circle,
                solid: true,
            },
        };
        let p = Params { rows: 3, columns: 3, number_of_grids: 1 };
        let inst = grid_instance(vec![grid], q, p.to_map(), 0).unwrap();
        assert_eq!(inst.ground_truth, Answer::Integer(0));
        assert_eq!(
            inst.question,
            "In grid 1, starting from the solid triangle at position (row 3, column 2), how many solid circles are there above it in the same column?"
        );
    }

    #[test]
    fn reference_cell_excluded() {
        let grid = uniform_grid(GridShape::Square, 4, 5);
        let q = GridQuestion {
            grid: 0,
            reference: (1, 1),
            direction: Direction::RightOf,
            target: GridCell { shape: GridShape::Square, solid: true },
        };
        assert_eq!(count_on_ray(&grid, &q), 3);
    }

    #[test]
    fn dimensions_parse() {
        assert_eq!(parse_dimension("3x9").unwrap(), (3, 9));
        assert!(parse_dimension("3by9").is_err());
        assert!(parse_dimension("1x1").is_err());
    }

    #[test]
    fn generated_rays_are_non_empty() {
        for seed in 0..50 {
            let p = Params { rows: 3, columns: 6, number_of_grids: 3 };
            let inst = generate(&p, seed).unwrap();
            let InstanceRecord::Grid { grids, question } = &inst.record else { panic!() };
            assert_eq!(grids.len(), 3);
            assert!(!ray(&grids[question.grid], question.reference, question.direction).is_empty());
        }
    }
}
