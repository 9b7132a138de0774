from artifacts.artifact_manager import ArtifactManager
