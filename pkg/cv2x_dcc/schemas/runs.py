from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    preset: str | None = None
    config: str | None = Field(
        None, description="YAML run configuration; defaults apply when omitted"
    )
    seeds: list[int] | None = None
    desk_scale: bool = False
    output_dir: str | None = None


class SummaryRow(BaseModel):
    mechanism: str
    seeds: int
    mean_cbr: float | None = None
    mean_pdr_by_bin: str = ""
    pdr_0_100: float | None = None
    pdr_100_500: float | None = None
    pdr_200_500: float | None = None
    mean_ipg: float | None = None
    awareness_mean: float | None = None
    awareness_std: float | None = None
    gamma: float = 0.0
    gamma_mt: float = 0.0
    gamma_nf: float = 0.0
    gamma_tsim: float = 0.0


class RunResponse(BaseModel):
    output_dir: str
    summary: list[SummaryRow]
