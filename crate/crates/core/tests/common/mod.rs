pub mod props;
pub mod systems;
