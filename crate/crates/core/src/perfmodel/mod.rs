//! Kernel timing tables, the host–device transfer model and the
//! heterogeneous load-balance solver.

mod balance;
mod calibrate;
mod fit;
mod kernel;
mod table;

pub use balance::{
    balance, balance_exhaustive, element_bytes, face_bytes, ideal_surface, invert_profile_for_ratio, pci_time,
    predict_step_time, BalanceSolution, StepPrediction,
};
pub use calibrate::{calibrate, forest_for_count, measure, table_from_samples, Sample};
pub use fit::{fit_affine, AffineFit};
pub use kernel::{Kernel, KernelTimes};
pub use table::{Device, DeviceProfile, KernelTimeTable, TableEntry, TransferModel};
