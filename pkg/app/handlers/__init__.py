# Handlers module: one class per pipeline stage, each exposed as a module-level singleton
