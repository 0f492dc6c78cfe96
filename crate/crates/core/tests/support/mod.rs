pub mod reference_book;
