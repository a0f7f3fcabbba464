//! Trajectory rendering: an ASCII sketch of the grid and an SVG drawing of
//! agent routes and request sites.

use tltl_marl::world::MsPlan;
use tltl_marl::Scenario64;

/// Grid layout of a scenario, recovered from the vertex count when the graph
/// was declared as a grid. Falls back to a single row.
fn grid_shape(scenario: &Scenario64) -> (usize, usize) {
    let n = scenario.graph.num_vertices();
    let mut width = n;
    let mut height = 1;
    for w in (2..=n).rev() {
        if n % w == 0 {
            let h = n / w;
            // a grid graph has exactly w*(h-1) + h*(w-1) undirected edges
            let edges: usize =
                (0..n).map(|v| scenario.graph.neighbors(v).len()).sum::<usize>() / 2;
            if edges == w * (h - 1) + h * (w - 1) && w >= h {
                width = w;
                height = h;
                break;
            }
        }
    }
    (width, height)
}

/// One ASCII grid per agent: `S` start, `E` end, `*` visited, request sites
/// by id, `!` where the agent serviced.
pub fn ascii_routes(scenario: &Scenario64, plans: &[MsPlan]) -> String {
    let (width, height) = grid_shape(scenario);
    let mut out = String::new();
    for (i, plan) in plans.iter().enumerate() {
        out.push_str(&format!("agent {}:\n", i + 1));
        let mut cells = vec!['.'; width * height];
        for req in &scenario.requests {
            for &v in &req.locations {
                cells[v] = char::from_digit((req.display_id % 10) as u32, 10).unwrap_or('#');
            }
        }
        for &(v, prop) in &plan.steps {
            cells[v] = if prop.is_some() { '!' } else { '*' };
        }
        if let Some(&(start, _)) = plan.steps.first() {
            cells[start] = 'S';
        }
        if let Some(&(end, _)) = plan.steps.last() {
            if cells[end] != 'S' {
                cells[end] = 'E';
            }
        }
        for row in 0..height {
            for col in 0..width {
                out.push(cells[row * width + col]);
                out.push(' ');
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

const ROUTE_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// SVG drawing of the grid, request sites, and each agent's route. Routes are
/// offset slightly per agent so overlapping paths stay visible.
pub fn svg_routes(scenario: &Scenario64, plans: &[MsPlan]) -> String {
    let (width, height) = grid_shape(scenario);
    let cell = 48.0;
    let pad = 24.0;
    let w = width as f64 * cell + 2.0 * pad;
    let h = height as f64 * cell + 2.0 * pad;
    let center = |v: usize| -> (f64, f64) {
        let row = v / width;
        let col = v % width;
        (pad + col as f64 * cell + cell / 2.0, pad + row as f64 * cell + cell / 2.0)
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    for row in 0..height {
        for col in 0..width {
            svg.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"none\" stroke=\"#cccccc\"/>\n",
                pad + col as f64 * cell,
                pad + row as f64 * cell,
            ));
        }
    }
    for req in &scenario.requests {
        let shared = req.is_shared();
        for &v in &req.locations {
            let (x, y) = center(v);
            let fill = if shared { "#f4cccc" } else { "#fff2cc" };
            svg.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"{fill}\" stroke=\"#999999\"/>\n\
                 <text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
                 text-anchor=\"middle\">r{}</text>\n",
                x - cell / 2.0,
                y - cell / 2.0,
                y + cell / 2.0 - 6.0,
                req.display_id,
            ));
        }
    }
    for (i, plan) in plans.iter().enumerate() {
        let color = ROUTE_COLORS[i % ROUTE_COLORS.len()];
        let offset = (i as f64 - (plans.len() as f64 - 1.0) / 2.0) * 5.0;
        let mut line = String::from("<polyline fill=\"none\" points=\"");
        for &(v, _) in &plan.steps {
            let (x, y) = center(v);
            line.push_str(&format!("{:.1},{:.1} ", x + offset, y + offset));
        }
        line.push_str(&format!(
            "\" stroke=\"{color}\" stroke-width=\"2.5\" opacity=\"0.85\"/>\n"
        ));
        svg.push_str(&line);
        if let Some(&(start, _)) = plan.steps.first() {
            let (x, y) = center(start);
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"6\" fill=\"{color}\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
                 fill=\"{color}\">a{}</text>\n",
                x + offset,
                y + offset,
                x + offset + 8.0,
                y + offset - 8.0,
                i + 1,
            ));
        }
        for &(v, prop) in &plan.steps {
            if prop.is_some() {
                let (x, y) = center(v);
                svg.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"9\" fill=\"none\" \
                     stroke=\"{color}\" stroke-width=\"2\"/>\n",
                    x + offset,
                    y + offset,
                ));
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}
