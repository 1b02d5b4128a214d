"""Privacy-aware photo gallery profiling.

Turns per-image feature records (scene embeddings and scores, object
confidences, faces, EXIF) into a user interest profile: face clustering
with demography fusion, private/public routing, per-view classifier
fusion, and attention pooling of a photo set into one descriptor.
"""

from .attention import (AggregatorConfig, AggregatorModel, UserExample,
                        aggregate, attention_weights, average_baseline,
                        predict_user_profile, top_k_f1, train_aggregator,
                        train_average_baseline)
from .clustering import cluster_labels
from .faces import (ClusteringParams, DemographyReport, FaceCluster,
                    analyze_demography, important_clusters)
from .fusion import (FusionModel, ImageRepresentation, fit_fusion_weights,
                     object_confidence_vector, predict_fused,
                     train_fusion_model, train_view_classifier)
from .privacy import (PrivacyConfig, Reason, RoutingDecision, Verdict,
                      classify_text_sensitivity, is_portrait, route_photo,
                      route_video, train_text_sensitivity)
from .profiler import (CategoryMap, ProfileConfig, UserProfile,
                       build_profile, categorize_record, geo_locations,
                       select_video_frames)
from .records import (ExifMeta, FaceObservation, Gallery, GalleryFormatError,
                      GalleryHeader, ImageFeatureRecord, load_gallery,
                      write_gallery)

__version__ = "0.1.0"

__all__ = [
    "AggregatorConfig", "AggregatorModel", "CategoryMap", "ClusteringParams",
    "DemographyReport", "ExifMeta", "FaceCluster", "FaceObservation",
    "FusionModel", "Gallery", "GalleryFormatError", "GalleryHeader",
    "ImageFeatureRecord", "ImageRepresentation", "PrivacyConfig",
    "ProfileConfig", "Reason", "RoutingDecision", "UserExample",
    "UserProfile", "Verdict", "aggregate", "analyze_demography",
    "attention_weights", "average_baseline", "build_profile",
    "categorize_record", "classify_text_sensitivity", "cluster_labels",
    "fit_fusion_weights", "geo_locations", "important_clusters",
    "is_portrait", "load_gallery", "object_confidence_vector",
    "predict_fused", "predict_user_profile", "route_photo", "route_video",
    "select_video_frames", "top_k_f1", "train_aggregator",
    "train_average_baseline", "train_fusion_model", "train_text_sensitivity",
    "train_view_classifier", "write_gallery",
]
