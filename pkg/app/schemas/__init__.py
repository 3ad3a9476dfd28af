# Pydantic schemas for reports and experiment configuration
