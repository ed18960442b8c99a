"""
alethe 인터프리터 FastAPI 서버
프로그램 업로드, 모호성 검사, 실행 계획 조회, 질의 평가를 HTTP로 제공
"""

import asyncio
import io
import os
import threading
from datetime import datetime
from typing import Dict, List, Optional

from dotenv import load_dotenv
from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel
import uvicorn

from checker import check_program
from kernel import RenderOptions, render_value
from planner import render_plan
from reader import AletheError, Evaluate, RelationQuery, parse_repl_line
from shell import EXIT_DIAGNOSTIC, EXIT_OK, EXIT_STALLED, Session, compile_program

load_dotenv()

# 요청/응답 모델 정의
class ProgramRequest(BaseModel):
    source: str
    name: str = "<http>"

class ProgramResponse(BaseModel):
    name: str
    rules: int
    haltings: int
    warnings: List[str] = []

class EvaluateRequest(BaseModel):
    query: str

class EvaluateResponse(BaseModel):
    query: str
    status: str
    exit_code: int
    output: List[str]
    variables: Dict[str, str] = {}
    timestamp: str

class CheckResponse(BaseModel):
    ambiguous: bool
    nodes: int
    edges: int
    diagnostics: List[str]

# FastAPI 앱 생성
app = FastAPI(
    title="alethe 인터프리터 서비스",
    description="가역 항 재작성 언어 alethe의 검사·계획·평가 API",
    version="1.0.0"
)

# CORS 설정
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# 전역 세션 (요청마다 출력 버퍼만 바꿔 쓴다)
session: Optional[Session] = None
program_name: Optional[str] = None
session_lock = threading.Lock()

STATUS_TEXT = {EXIT_OK: "ok", EXIT_DIAGNOSTIC: "error", EXIT_STALLED: "stalled"}


def preload_files() -> List[str]:
    raw = os.getenv("ALETHE_PRELOAD", "")
    return [p for p in raw.replace(os.pathsep, " ").split() if p]


@app.on_event("startup")
async def startup_event():
    """서버 시작시 세션 초기화 + ALETHE_PRELOAD 로딩"""
    global session, program_name
    session = Session(options=RenderOptions(), out=io.StringIO())
    program_name = None
    files = preload_files()
    if files:
        if session.load(files):
            program_name = " ".join(files)
            print(f"📦 프로그램 로딩 완료: {program_name} (규칙 {len(session.program.rules)}개)")
        else:
            print(f"❌ 프로그램 로딩 실패: {session.out.getvalue().strip()}")
    print("🚀 alethe 인터프리터 서비스 시작됨")


@app.on_event("shutdown")
async def shutdown_event():
    if session is not None:
        session.close()


def require_program() -> Session:
    if session is None or program_name is None:
        raise HTTPException(
            status_code=503,
            detail="로딩된 프로그램이 없습니다. 먼저 /programs 로 올려 주세요."
        )
    return session


def install_program(source: str, name: str) -> ProgramResponse:
    global program_name
    if session is None:
        raise HTTPException(status_code=503, detail="세션이 아직 준비되지 않았습니다.")
    result = compile_program((), session.search_path, source, name)
    if result.program is None:
        raise HTTPException(status_code=400, detail=result.diagnostics)
    if result.diagnostics:
        raise HTTPException(status_code=422, detail=result.diagnostics)
    with session_lock:
        session.program = result.program
        session.files = []
        program_name = name
    print(f"✅ 프로그램 교체: {name}")
    return ProgramResponse(
        name=name,
        rules=len(result.program.rules),
        haltings=len(result.program.haltings),
        warnings=result.program.warnings,
    )


def run_query(query: str) -> EvaluateResponse:
    """워커 스레드에서 한 질의를 평가"""
    current = require_program()
    try:
        command = parse_repl_line(query)
    except AletheError as e:
        raise HTTPException(status_code=400, detail=str(e))
    if not isinstance(command, (Evaluate, RelationQuery)):
        raise HTTPException(status_code=400, detail="'|', '>', '<' 평가 형식만 받습니다.")
    with session_lock:
        current.out = io.StringIO()
        current.status = EXIT_OK
        current.execute(command)
        output = current.out.getvalue().splitlines()
        code = current.status
        variables = {k: render_value(v, current.options) for k, v in current.variables.items()}
    if code == EXIT_DIAGNOSTIC:
        raise HTTPException(status_code=400, detail=output)
    return EvaluateResponse(
        query=query,
        status=STATUS_TEXT.get(code, "error"),
        exit_code=code,
        output=output,
        variables=variables,
        timestamp=datetime.now().isoformat()
    )


@app.get("/")
async def root():
    """루트 엔드포인트"""
    return {
        "message": "alethe 인터프리터 서비스",
        "status": "running",
        "version": "1.0.0"
    }

@app.get("/health")
async def health_check():
    """헬스 체크"""
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "program_loaded": program_name is not None,
        "program": program_name,
        "definitions": len(session.program.definitions) if session is not None else 0
    }

@app.post("/programs", response_model=ProgramResponse)
async def load_program_endpoint(request: ProgramRequest):
    """소스 텍스트를 세션 프로그램으로"""
    return install_program(request.source, request.name)

@app.post("/programs/upload", response_model=ProgramResponse)
async def upload_program(file: UploadFile = File(...)):
    """.ale 파일 업로드"""
    if not (file.filename or "").endswith(".ale"):
        raise HTTPException(status_code=400, detail=".ale 파일만 올릴 수 있습니다.")
    raw = await file.read()
    try:
        source = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise HTTPException(status_code=400, detail="UTF-8 텍스트가 아닙니다.")
    return install_program(source, file.filename)

@app.post("/evaluate", response_model=EvaluateResponse)
async def evaluate_endpoint(request: EvaluateRequest):
    """`|`, `>`, `<` 질의 평가"""
    try:
        return await asyncio.to_thread(run_query, request.query)
    except HTTPException:
        raise
    except Exception as e:
        print(f"❌ 평가 처리 오류: {e}")
        raise HTTPException(
            status_code=500,
            detail=f"평가 중 오류가 발생했습니다: {str(e)}"
        )

@app.get("/check", response_model=CheckResponse)
async def check_endpoint():
    """모호성 검사 결과"""
    current = require_program()
    report = check_program(current.program)
    return CheckResponse(
        ambiguous=not report.ok,
        nodes=len(report.nodes),
        edges=report.edges,
        diagnostics=report.render()
    )

@app.get("/plans")
async def plans_endpoint():
    """규칙별 실행 계획"""
    current = require_program()
    return {
        "program": program_name,
        "plans": [line for rule in current.program.rules for line in render_plan(rule)]
    }

@app.get("/variables")
async def variables_endpoint():
    """세션 변수"""
    current = require_program()
    return {
        "variables": {k: render_value(v, current.options) for k, v in current.variables.items()}
    }

if __name__ == "__main__":
    uvicorn.run(
        "alethe_server:app",
        host=os.getenv("ALETHE_HOST", "0.0.0.0"),
        port=int(os.getenv("ALETHE_PORT", "8005")),
        reload=True,
        log_level="info"
    )
