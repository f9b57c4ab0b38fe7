# Spin model configuration types package
