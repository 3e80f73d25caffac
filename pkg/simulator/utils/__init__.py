# Helper utilities for the simulator app
