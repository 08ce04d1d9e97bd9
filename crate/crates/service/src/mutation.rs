//! Annotation edits sent by the client, applied all-or-nothing.

use serde::{Deserialize, Serialize};
use speedkit_core::geom::{self, Point};
use speedkit_core::model::{ContactPoint, GridAnnotation, LineAnnotation, ModelError, PixelPoint, Project};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MutationError {
    #[error("{0}")]
    BadReference(String),
    #[error(transparent)]
    Invariant(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    AddLine { points: Vec<PixelPoint> },
    AddLinePoint { line: usize, point: PixelPoint },
    MoveLinePoint { line: usize, index: usize, to: PixelPoint },
    DeleteLinePoint { line: usize, index: usize },
    DeleteLine { line: usize },
    AddGridCorner { point: PixelPoint },
    MoveGridCorner { index: usize, to: PixelPoint },
    DeleteGridCorner { index: usize },
    SetGridDimensions { width_m: f64, height_m: f64 },
    AddContactPoint { frame: u64, point: PixelPoint, m: u32 },
    MoveContactPoint {
        index: usize,
        to: PixelPoint,
        #[serde(default)]
        frame: Option<u64>,
    },
    DeleteContactPoint { index: usize },
    SetM { index: usize, m: u32 },
    SetDeltaT { delta_t_s: f64 },
}

/// Grid corners collected before the rectangle is complete.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GridDraft {
    pub corners: Vec<PixelPoint>,
    pub width_m: Option<f64>,
    pub height_m: Option<f64>,
}

fn bad(msg: impl Into<String>) -> MutationError {
    MutationError::BadReference(msg.into())
}

fn line_mut(project: &mut Project, line: usize) -> Result<&mut LineAnnotation, MutationError> {
    project.lines.get_mut(line).ok_or_else(|| bad(format!("no line {line}")))
}

fn cp_mut(project: &mut Project, index: usize) -> Result<&mut ContactPoint, MutationError> {
    project.path.cps.get_mut(index).ok_or_else(|| bad(format!("no contact point {index}")))
}

/// Promotes a full draft (4 corners and both dimensions) to the project grid.
fn promote(project: &mut Project, draft: &mut GridDraft) -> Result<(), MutationError> {
    if draft.corners.len() == 4 {
        let pts: Vec<Point> = draft.corners.iter().map(|c| c.to_point()).collect();
        if !geom::is_strictly_convex(&pts, 1e-12) {
            return Err(ModelError::invariant(
                "grid.corners",
                "corners must form a strictly convex quadrilateral with no three collinear",
            )
            .into());
        }
        if let (Some(w), Some(h)) = (draft.width_m, draft.height_m) {
            let corners = [draft.corners[0], draft.corners[1], draft.corners[2], draft.corners[3]];
            project.grid = Some(GridAnnotation::new(corners, w, h));
            *draft = GridDraft::default();
        }
    }
    Ok(())
}

fn apply_one(project: &mut Project, draft: &mut GridDraft, m: &Mutation) -> Result<(), MutationError> {
    match m {
        Mutation::AddLine { points } => project.lines.push(LineAnnotation { points: points.clone() }),
        Mutation::AddLinePoint { line, point } => line_mut(project, *line)?.points.push(*point),
        Mutation::MoveLinePoint { line, index, to } => {
            *line_mut(project, *line)?.points.get_mut(*index).ok_or_else(|| bad(format!("no point {index}")))? = *to;
        }
        Mutation::DeleteLinePoint { line, index } => {
            let l = line_mut(project, *line)?;
            if *index >= l.points.len() {
                return Err(bad(format!("no point {index} on line {line}")));
            }
            l.points.remove(*index);
        }
        Mutation::DeleteLine { line } => {
            if *line >= project.lines.len() {
                return Err(bad(format!("no line {line}")));
            }
            project.lines.remove(*line);
        }
        Mutation::AddGridCorner { point } => {
            if project.grid.is_some() {
                return Err(bad("grid already has 4 corners; move or delete one first"));
            }
            if draft.corners.len() >= 4 {
                return Err(bad("grid draft already has 4 corners"));
            }
            draft.corners.push(*point);
            promote(project, draft)?;
        }
        Mutation::MoveGridCorner { index, to } => match &mut project.grid {
            Some(g) => {
                let mut corners = g.corners;
                *corners.get_mut(*index).ok_or_else(|| bad(format!("no grid corner {index}")))? = *to;
                let extra = std::mem::take(&mut g.extra_marks);
                *g = GridAnnotation { extra_marks: extra, ..GridAnnotation::new(corners, g.width_m, g.height_m) };
            }
            None => {
                *draft.corners.get_mut(*index).ok_or_else(|| bad(format!("no grid corner {index}")))? = *to;
                promote(project, draft)?;
            }
        },
        Mutation::DeleteGridCorner { index } => {
            if let Some(g) = project.grid.take() {
                if *index >= 4 {
                    return Err(bad(format!("no grid corner {index}")));
                }
                let mut corners = g.corners.to_vec();
                corners.remove(*index);
                *draft = GridDraft { corners, width_m: Some(g.width_m), height_m: Some(g.height_m) };
            } else {
                if *index >= draft.corners.len() {
                    return Err(bad(format!("no grid corner {index}")));
                }
                draft.corners.remove(*index);
            }
        }
        Mutation::SetGridDimensions { width_m, height_m } => match &mut project.grid {
            Some(g) => {
                g.width_m = *width_m;
                g.height_m = *height_m;
            }
            None => {
                if !(width_m.is_finite() && *width_m > 0.0 && height_m.is_finite() && *height_m > 0.0) {
                    return Err(ModelError::invariant("grid", "dimensions must be finite and > 0").into());
                }
                draft.width_m = Some(*width_m);
                draft.height_m = Some(*height_m);
                promote(project, draft)?;
            }
        },
        Mutation::AddContactPoint { frame, point, m } => {
            let at = project.path.cps.partition_point(|cp| cp.frame < *frame);
            project.path.cps.insert(at, ContactPoint::new(*frame, *point, *m));
        }
        Mutation::MoveContactPoint { index, to, frame } => {
            let cp = cp_mut(project, *index)?;
            cp.point = *to;
            if let Some(f) = frame {
                cp.frame = *f;
            }
        }
        Mutation::DeleteContactPoint { index } => {
            if *index >= project.path.cps.len() {
                return Err(bad(format!("no contact point {index}")));
            }
            project.path.cps.remove(*index);
        }
        Mutation::SetM { index, m } => cp_mut(project, *index)?.m = *m,
        Mutation::SetDeltaT { delta_t_s } => project.timing.delta_t_s = *delta_t_s,
    }
    Ok(())
}

/// Applies `mutations` in order. Either all of them take effect and the
/// result passes validation, or `project` and `draft` are left untouched.
pub fn apply(project: &mut Project, draft: &mut GridDraft, mutations: &[Mutation]) -> Result<(), MutationError> {
    let mut p = project.clone();
    let mut d = draft.clone();
    for m in mutations {
        apply_one(&mut p, &mut d, m)?;
    }
    p.check()?;
    *project = p;
    *draft = d;
    Ok(())
}
