//! Bridges simulation and estimation: site-week aggregation, panel
//! generation with treatment injection, and delimited-text panel I/O.

mod aggregate;
mod generate;
mod io;

pub use aggregate::{aggregate_outcomes, SiteWeekAggregate, DAYS_PER_WEEK};
pub use generate::{
    generate_panel, GeneratedPanel, InjectionMode, PanelGenConfig, Provenance, SiteSpec,
    TimelineConfig,
};
pub use io::{load_panel, parse_panel, serialize_panel, write_panel, PANEL_HEADER};
