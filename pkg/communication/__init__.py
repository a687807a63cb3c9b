# Communication package