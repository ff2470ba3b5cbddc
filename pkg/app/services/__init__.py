# Services module: condition encoders and evaluators
