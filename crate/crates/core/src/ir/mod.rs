//! The SSA intermediate representation shared by every dialect.

mod attr;
mod module;
mod parser;
mod printer;
mod types;
mod verify;

pub use attr::{Attr, AttrKind};
pub use module::{visit_regions_mut, IrModule, Operation, Region, ValueId};
pub use parser::parse_module;
pub use printer::{print_module, print_op, value_numbering};
pub use types::{TimeUnit, Type};
pub use verify::verify;
