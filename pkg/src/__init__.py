"""Bundle pricing toolkit package."""
